import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfpo.errors import DegenerateChannel, UsageError
from dfpo.objectives import (batch_mse_objective, mmse_combiner, mrc_combiner,
                             multi_user_mse_objective, rate_report,
                             single_user_power_objective)


def random_instance(rng, M=None, K=None):
    M = M or int(rng.integers(2, 9))
    K = K or int(rng.integers(1, M + 1))
    H = (rng.normal(size=(M, K)) + 1j * rng.normal(size=(M, K))) / np.sqrt(2)
    sigma2 = 10.0 ** rng.uniform(-1, 1)
    p_t = 10.0 ** rng.uniform(-1, 1)
    return H, sigma2, p_t


def test_single_user_power_objective_values():
    assert single_user_power_objective(np.zeros(4, complex)) == 0.0
    h = np.exp(1j * np.linspace(0, 1, 4))
    assert single_user_power_objective(h) == pytest.approx(4.0, rel=1e-12)
    rng = np.random.default_rng(0)
    h = rng.normal(size=6) + 1j * rng.normal(size=6)
    assert single_user_power_objective(h) == pytest.approx(
        sum(abs(x) ** 2 for x in h), rel=1e-12)
    with pytest.raises(UsageError):
        single_user_power_objective(np.ones((3, 2)))


def test_mrc_combiner_direction_and_errors():
    e1 = np.array([1.0 + 0j, 0, 0])
    w = mrc_combiner(e1)
    assert np.allclose(w, e1)
    with pytest.raises(DegenerateChannel):
        mrc_combiner(np.zeros(3, complex))


def mrc_snr(h, w, sigma2, p_t):
    g = np.sqrt(p_t) * h
    return abs(np.vdot(w, g)) ** 2 / (sigma2 * np.vdot(w, w).real)


def test_mrc_achieves_matched_filter_bound():
    rng = np.random.default_rng(1)
    for _ in range(200):
        h = rng.normal(size=4) + 1j * rng.normal(size=4)
        sigma2, p_t = 0.3, 2.0
        w = mrc_combiner(h)
        bound = p_t * np.linalg.norm(h) ** 2 / sigma2
        assert mrc_snr(h, w, sigma2, p_t) == pytest.approx(bound, rel=1e-12)
        w_rand = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert mrc_snr(h, w_rand, sigma2, p_t) <= bound * (1 + 1e-12)


def test_mmse_combiner_reference_cases():
    sigma2 = 0.7
    # G = I: W = I / (1 + sigma^2)
    H = np.eye(3, dtype=complex)
    W = mmse_combiner(H, sigma2, 1.0)
    assert np.allclose(W, np.eye(3) / (1 + sigma2), atol=1e-12)

    # K = 1: w = g / (||g||^2 + sigma^2)
    rng = np.random.default_rng(2)
    h = rng.normal(size=5) + 1j * rng.normal(size=5)
    p_t = 0.4
    g = np.sqrt(p_t) * h
    w = mmse_combiner(h[:, None], sigma2, p_t)[:, 0]
    assert np.allclose(w, g / (np.linalg.norm(g) ** 2 + sigma2), atol=1e-12)


def test_mmse_combiner_matches_solver_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        H, sigma2, p_t = random_instance(rng)
        G = np.sqrt(p_t) * H
        W = mmse_combiner(H, sigma2, p_t)
        J = G @ G.conj().T + sigma2 * np.eye(G.shape[0])
        assert np.linalg.norm(J @ W - G) < 1e-10 * max(1.0, np.linalg.norm(G))


def test_mmse_combiner_requires_positive_noise():
    with pytest.raises(UsageError):
        mmse_combiner(np.eye(2, dtype=complex), 0.0, 1.0)


def test_rate_report_single_user_matches_snr():
    rng = np.random.default_rng(4)
    h = rng.normal(size=4) + 1j * rng.normal(size=4)
    sigma2, p_t = 0.2, 1.7
    rep = rate_report(h[:, None], None, sigma2, p_t)
    assert rep.sinr[0] == pytest.approx(p_t * np.linalg.norm(h) ** 2 / sigma2, rel=1e-10)
    assert rep.sum_rate == pytest.approx(np.log2(1 + rep.sinr[0]), rel=1e-12)


def test_rate_report_orthogonal_columns_zero_interference():
    sigma2, p_t = 0.5, 1.0
    G = np.zeros((4, 2), complex)
    G[0, 0] = 2.0
    G[1, 1] = 3.0
    rep = rate_report(G, None, sigma2, p_t)
    assert rep.sinr[0] == pytest.approx(4.0 / sigma2, rel=1e-10)
    assert rep.sinr[1] == pytest.approx(9.0 / sigma2, rel=1e-10)


def test_rate_equals_log_inverse_mse_for_mmse():
    rng = np.random.default_rng(5)
    for _ in range(300):
        H, sigma2, p_t = random_instance(rng)
        rep = rate_report(H, None, sigma2, p_t)
        assert np.max(np.abs(rep.rate - np.log2(1.0 / rep.mse))) < 1e-9
        assert np.all(rep.mse > 0) and np.all(rep.mse <= 1 + 1e-12)


def test_rate_report_general_combiner_mse_matches_closed_form():
    rng = np.random.default_rng(6)
    H, sigma2, p_t = random_instance(rng, M=5, K=3)
    W = mmse_combiner(H, sigma2, p_t)
    general = rate_report(H, W, sigma2, p_t)
    closed = rate_report(H, None, sigma2, p_t)
    assert np.allclose(general.mse, closed.mse, atol=1e-10)
    assert np.allclose(general.sinr, closed.sinr, atol=1e-10)
    # any other combiner does worse in MSE
    W_bad = W + 0.1 * (rng.normal(size=W.shape) + 1j * rng.normal(size=W.shape))
    worse = rate_report(H, W_bad, sigma2, p_t)
    assert np.all(worse.mse >= closed.mse - 1e-12)


def test_rate_report_shape_mismatch():
    with pytest.raises(UsageError):
        rate_report(np.ones((4, 2)), np.ones((3, 2)), 0.1, 1.0)


def test_sum_mse_trace_identity():
    rng = np.random.default_rng(7)
    for _ in range(300):
        H, sigma2, p_t = random_instance(rng)
        rep = rate_report(H, None, sigma2, p_t)
        trace = multi_user_mse_objective(H, sigma2, p_t)
        K = H.shape[1]
        assert abs(np.sum(rep.mse) - sigma2 * trace) < 1e-9 * K


def test_mse_objective_reference_cases():
    sigma2 = 0.3
    K = 3
    assert multi_user_mse_objective(np.zeros((4, K)), sigma2, 1.0) == pytest.approx(
        K / sigma2, rel=1e-12)
    Q, _ = np.linalg.qr(np.random.default_rng(8).normal(size=(5, K))
                        + 1j * np.random.default_rng(9).normal(size=(5, K)))
    assert multi_user_mse_objective(Q, sigma2, 1.0) == pytest.approx(
        K / (1 + sigma2), rel=1e-10)
    with pytest.raises(UsageError):
        multi_user_mse_objective(np.ones((2, 3)), sigma2, 1.0)


def test_mse_objective_monotone_in_singular_values():
    sigma2 = 0.1
    for scale in (1.5, 2.0, 5.0):
        a = multi_user_mse_objective(np.diag([1.0, 2.0]).astype(complex), sigma2, 1.0)
        b = multi_user_mse_objective(np.diag([scale, 2.0]).astype(complex), sigma2, 1.0)
        assert b < a


def test_batch_mse_objective_matches_scalar():
    rng = np.random.default_rng(10)
    batch = rng.normal(size=(7, 4, 3)) + 1j * rng.normal(size=(7, 4, 3))
    vals = batch_mse_objective(batch, 0.2, 0.9)
    for i in range(7):
        assert vals[i] == pytest.approx(
            multi_user_mse_objective(batch[i], 0.2, 0.9), rel=1e-12)


@given(seed=st.integers(0, 2**31))
def test_jensen_direction_for_mmse_mse(seed):
    rng = np.random.default_rng(seed)
    H, sigma2, p_t = random_instance(rng)
    mse = rate_report(H, None, sigma2, p_t).mse
    K = len(mse)
    assert np.sum(np.log(mse)) <= K * np.log(np.sum(mse) / K) + 1e-12
