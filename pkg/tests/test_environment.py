import numpy as np
import pytest

from dfpo.environment import (PilotBudget, PilotConfig, PilotEnvironment,
                              dbm_to_watts, dft_pilot_matrix, ls_estimate,
                              watts_to_dbm)
from dfpo.errors import BudgetExceeded, ConfigError, SingularPilot, UsageError
from dfpo.scenario import (ScenarioConfig, UserChannelParams, ScenarioParams,
                           CarrierConfig, channel_matrix, generate_scenario)

LAM = CarrierConfig.from_frequency(5e9).wavelength_m


def zero_gain_scenario(num_users=1, num_paths=2):
    users = tuple(
        UserChannelParams(np.zeros(num_paths), np.zeros(num_paths),
                          np.zeros(num_paths, complex), 30.0)
        for _ in range(num_users))
    return ScenarioParams(users, CarrierConfig.from_frequency(5e9), 1e-3, 2.0, (0,))


def test_dbm_conversions():
    assert dbm_to_watts(-90.0) == pytest.approx(1e-12)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert watts_to_dbm(dbm_to_watts(-37.2)) == pytest.approx(-37.2)


def test_pilot_config_validation():
    with pytest.raises(ConfigError):
        PilotConfig(0.0, 1e-12, 4)
    with pytest.raises(ConfigError):
        PilotConfig(1e-3, -1.0, 4)
    with pytest.raises(ConfigError):
        PilotConfig(1e-3, 1e-12, 0)
    c = PilotConfig.from_dbm(-5.0, -90.0, 4)
    assert c.transmit_power_w == pytest.approx(10 ** (-3.5))
    assert c.noise_power_w == pytest.approx(1e-12)


def test_dft_pilot_matrix_orthogonal_unit_rows():
    for K, T in ((1, 1), (3, 4), (4, 4), (2, 7)):
        S = dft_pilot_matrix(K, T)
        assert S.shape == (K, T)
        assert np.allclose(np.abs(S), 1.0)
        assert np.allclose(S @ S.conj().T, T * np.eye(K), atol=1e-12)


def test_budget_ledger_and_cap():
    b = PilotBudget(10)
    b.charge(4)
    b.charge(6)
    assert b.consumed == 10 and b.remaining == 0
    with pytest.raises(BudgetExceeded):
        b.charge(1)
    assert b.consumed == 10  # failed charge does not consume
    assert b.log == [(0, 4, 4), (1, 6, 10)]


def test_budget_trace_csv(tmp_path):
    b = PilotBudget()
    b.charge(4)
    b.charge(1)
    path = tmp_path / "trace.csv"
    b.write_trace(path)
    assert path.read_text() == (
        "query_index,block_length,consumed_total\n0,4,4\n1,1,5\n")


def test_receive_pilots_noiseless_matches_channel():
    s = generate_scenario(ScenarioConfig(num_users=1, num_paths=3), 1)
    cfg = PilotConfig(2.5e-4, 0.0, 1)
    env = PilotEnvironment(s, cfg, seed=0, pilot_matrix=np.ones((1, 1)))
    pos = np.array([[0.01, 0.0], [0.0, -0.01]])
    Y = env.receive_pilots(pos)
    h = channel_matrix(pos, s)[:, 0]
    assert np.allclose(Y[:, 0], np.sqrt(2.5e-4) * h, atol=1e-18)
    assert env.budget.consumed == 1


def test_receive_pilots_zero_channel_is_pure_noise():
    s = zero_gain_scenario(num_users=2)
    cfg = PilotConfig(1e-3, 1e-10, 3)
    env = PilotEnvironment(s, cfg, seed=5)
    Y = env.receive_pilots(np.zeros((4, 2)))
    assert Y.shape == (4, 3)
    assert np.all(Y != 0)


def test_noise_variance_calibration():
    # zero channel: Y entries are i.i.d. CN(0, sigma^2); 2000 blocks of 4x4
    # give 3.2e4 complex samples, standard error ~0.6% << 2% tolerance
    s = zero_gain_scenario(num_users=4)
    sigma2 = 3e-11
    env = PilotEnvironment(s, PilotConfig(1e-3, sigma2, 4), seed=7)
    pos = np.zeros((4, 2))
    acc, n = 0.0, 0
    for _ in range(2000):
        Y = env.receive_pilots(pos)
        acc += np.sum(np.abs(Y) ** 2)
        n += Y.size
    assert acc / n == pytest.approx(sigma2, rel=0.02)


def test_probe_noiseless_and_zero_channel():
    s = generate_scenario(ScenarioConfig(num_users=1, num_paths=4), 2)
    p_t = 1e-3
    env = PilotEnvironment(s, PilotConfig(p_t, 0.0, 1), seed=0)
    pos = np.random.default_rng(1).uniform(-0.05, 0.05, (4, 2))
    val = env.received_power_probe(pos)
    h = channel_matrix(pos, s)[:, 0]
    assert val == pytest.approx(p_t * np.linalg.norm(h) ** 2, rel=1e-12)

    env0 = PilotEnvironment(zero_gain_scenario(), PilotConfig(p_t, 0.0, 1), seed=0)
    assert env0.received_power_probe(pos) == 0.0


def test_probe_rejects_multi_user():
    s = generate_scenario(ScenarioConfig(num_users=2, num_paths=2), 3)
    env = PilotEnvironment(s, PilotConfig(1e-3, 1e-12, 3), seed=0)
    with pytest.raises(UsageError):
        env.received_power_probe(np.zeros((2, 2)))


def test_probe_power_bias_identity():
    # E||y||^2 = P ||h||^2 + M sigma^2; run at P||h||^2 ~ M sigma^2 so the
    # noise term matters; 2e4 probes -> standard error well under 2%
    s = generate_scenario(ScenarioConfig(num_users=1, num_paths=3), 9)
    pos = np.random.default_rng(0).uniform(-0.05, 0.05, (4, 2))
    h = channel_matrix(pos, s)[:, 0]
    sigma2 = 1e-9
    p_t = 4 * sigma2 / np.linalg.norm(h) ** 2
    env = PilotEnvironment(s, PilotConfig(p_t, sigma2, 1), seed=11)
    n = 20000
    acc = sum(env.received_power_probe(pos) for _ in range(n)) / n
    expected = p_t * np.linalg.norm(h) ** 2 + 4 * sigma2
    assert acc == pytest.approx(expected, rel=0.02)
    assert env.budget.consumed == n


def test_probe_budget_exhaustion():
    s = generate_scenario(ScenarioConfig(num_users=1, num_paths=2), 4)
    env = PilotEnvironment(s, PilotConfig(1e-3, 1e-12, 1),
                           PilotBudget(2), seed=0)
    pos = np.zeros((1, 2))
    env.received_power_probe(pos)
    env.received_power_probe(pos)
    with pytest.raises(BudgetExceeded):
        env.received_power_probe(pos)


def test_ls_estimate_exact_on_noiseless_identity_pilots():
    rng = np.random.default_rng(0)
    H = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    P = 0.7
    S = np.eye(3, dtype=complex)
    Y = np.sqrt(P) * H @ S
    assert np.linalg.norm(ls_estimate(Y, S, P) - H) < 1e-12


def test_ls_estimate_exact_for_any_full_rank_pilots():
    rng = np.random.default_rng(1)
    H = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    S = rng.normal(size=(3, 6)) + 1j * rng.normal(size=(3, 6))
    Y = np.sqrt(0.2) * H @ S
    assert np.linalg.norm(ls_estimate(Y, S, 0.2) - H) < 1e-10


def test_ls_estimate_matches_lstsq_oracle_under_noise():
    rng = np.random.default_rng(2)
    H = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    S = dft_pilot_matrix(2, 5)
    P = 1.3
    Y = np.sqrt(P) * H @ S + 0.1 * (rng.normal(size=(4, 5)) + 1j * rng.normal(size=(4, 5)))
    est = ls_estimate(Y, S, P)
    # independent oracle: QR-based least squares on the transposed system
    oracle = np.linalg.lstsq((np.sqrt(P) * S).T, Y.T, rcond=None)[0].T
    assert np.linalg.norm(est - oracle) < 1e-10
    # residual orthogonal to the pilot row space
    residual = Y - np.sqrt(P) * est @ S
    assert np.linalg.norm(residual @ S.conj().T) < 1e-10


def test_ls_estimate_rank_deficient_pilots_rejected():
    S = np.ones((2, 4), dtype=complex)  # two identical rows
    Y = np.zeros((3, 4), dtype=complex)
    with pytest.raises(SingularPilot):
        ls_estimate(Y, S, 1.0)
    with pytest.raises(SingularPilot):
        ls_estimate(np.zeros((3, 2)), dft_pilot_matrix(3, 2), 1.0)  # T < K


def test_environment_determinism():
    s = generate_scenario(ScenarioConfig(num_users=2, num_paths=3), 6)
    cfg = PilotConfig(1e-3, 1e-11, 3)
    pos = np.random.default_rng(4).uniform(-0.03, 0.03, (3, 2))
    Y1 = PilotEnvironment(s, cfg, seed=[1, 2]).receive_pilots(pos)
    Y2 = PilotEnvironment(s, cfg, seed=[1, 2]).receive_pilots(pos)
    assert np.array_equal(Y1, Y2)


class SealedEnv:
    """Measurement-only facade: what an optimizer is allowed to touch."""

    def __init__(self, env):
        self._env = env
        self.budget = env.budget
        self.num_users = env.num_users
        self.transmit_power_w = env.transmit_power_w
        self.noise_power_w = env.noise_power_w
        self.pilot_length = env.pilot_length
        self.pilot_matrix = env.pilot_matrix

    def receive_pilots(self, positions):
        return self._env.receive_pilots(positions)

    def received_power_probe(self, positions):
        return self._env.received_power_probe(positions)


def test_optimizers_run_against_sealed_environment():
    # the optimizer path must function with measurement access only
    from dfpo.scenario import MovableRegion
    from dfpo.zo_optimizer import ZOConfig, optimize_multi_user, optimize_single_user

    region = MovableRegion(2 * LAM)
    cfg = ZOConfig.for_wavelength(LAM, 3, 4)

    s1 = generate_scenario(ScenarioConfig(num_users=1, num_paths=4), 8)
    env1 = SealedEnv(PilotEnvironment(s1, PilotConfig(1e-3, 1e-12, 1), seed=0))
    pos, _ = optimize_single_user(env1, region, 4, cfg, 1)
    assert pos.shape == (4, 2)

    s3 = generate_scenario(ScenarioConfig(num_users=3, num_paths=4), 9)
    env3 = SealedEnv(PilotEnvironment(s3, PilotConfig(1e-3, 1e-12, 4), seed=0))
    pos, _ = optimize_multi_user(env3, region, 4, cfg, 1)
    assert pos.shape == (4, 2)
