"""Pilot-measurement environment.

The environment owns a hidden channel realization and answers measurement
queries at requested antenna positions. Optimizers only ever see received
pilot blocks or received-power probes; the true path parameters stay inside
(`_scenario` is private by convention and nothing here returns it). Every
query is charged against a pilot-symbol ledger so experiments cannot exceed
their training budget unnoticed.

Power units: everything internal is linear watts. dBm values convert via
``10**((x - 30) / 10)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, ConfigError, SingularPilot, UsageError
from .scenario import ScenarioParams, channel_matrix


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


@dataclass(frozen=True)
class PilotConfig:
    """Transmit power, noise power and pilot block length.

    ``noise_power_w == 0`` selects the idealized noiseless mode used by
    oracle tests; real runs keep it positive.
    """

    transmit_power_w: float
    noise_power_w: float
    pilot_length: int

    def __post_init__(self):
        if not self.transmit_power_w > 0:
            raise ConfigError("transmit power must be positive")
        if self.noise_power_w < 0:
            raise ConfigError("noise power must be nonnegative")
        if self.pilot_length < 1:
            raise ConfigError("pilot length must be at least 1")

    @classmethod
    def from_dbm(cls, transmit_dbm: float, noise_dbm: float, pilot_length: int) -> "PilotConfig":
        return cls(dbm_to_watts(transmit_dbm), dbm_to_watts(noise_dbm), pilot_length)


def dft_pilot_matrix(num_users: int, pilot_length: int):
    """K x T pilot block with orthogonal unit-power rows (DFT rows).

    For T >= K the rows satisfy S @ S^H = T * I, so the block-average
    symbol covariance is the identity.
    """
    k = np.arange(num_users)[:, None]
    t = np.arange(pilot_length)[None, :]
    return np.exp(-2j * np.pi * k * t / pilot_length)


class PilotBudget:
    """Ledger of consumed pilot symbols with an optional hard cap."""

    def __init__(self, cap: int | None = None):
        self.cap = cap
        self.consumed = 0
        self.log = []  # (query_index, block_length, consumed_total)

    @property
    def remaining(self):
        return None if self.cap is None else self.cap - self.consumed

    def charge(self, num_symbols: int):
        if self.cap is not None and self.consumed + num_symbols > self.cap:
            raise BudgetExceeded(
                f"charge of {num_symbols} pilot symbols exceeds cap "
                f"{self.cap} (consumed {self.consumed})"
            )
        self.consumed += num_symbols
        self.log.append((len(self.log), num_symbols, self.consumed))

    def write_trace(self, path):
        with open(path, "w") as fh:
            fh.write("query_index,block_length,consumed_total\n")
            for row in self.log:
                fh.write(f"{row[0]},{row[1]},{row[2]}\n")


class PilotEnvironment:
    """Measurement interface over a hidden scenario.

    One environment serves one optimization run; the budget counter is
    sequential. Distinct trials should own distinct instances.
    """

    def __init__(self, scenario: ScenarioParams, config: PilotConfig,
                 budget: PilotBudget | None = None, seed=0, pilot_matrix=None):
        self._scenario = scenario
        self.config = config
        self.budget = budget if budget is not None else PilotBudget()
        self._rng = np.random.default_rng(seed)
        if pilot_matrix is None:
            pilot_matrix = dft_pilot_matrix(scenario.num_users, config.pilot_length)
        pilot_matrix = np.asarray(pilot_matrix, complex)
        if pilot_matrix.shape != (scenario.num_users, config.pilot_length):
            raise ConfigError("pilot matrix must be K x T")
        self.pilot_matrix = pilot_matrix

    @property
    def num_users(self) -> int:
        return self._scenario.num_users

    @property
    def transmit_power_w(self) -> float:
        return self.config.transmit_power_w

    @property
    def noise_power_w(self) -> float:
        return self.config.noise_power_w

    @property
    def pilot_length(self) -> int:
        return self.config.pilot_length

    def _noise(self, shape):
        sigma2 = self.config.noise_power_w
        if sigma2 == 0.0:
            return np.zeros(shape, complex)
        draws = self._rng.normal(0.0, np.sqrt(sigma2 / 2), shape + (2,))
        return draws @ np.array([1.0, 1j])

    def receive_pilots(self, positions):
        """One received pilot block Y = sqrt(P) * H(positions) @ S + N, shape (M, T).

        Charges T pilot symbols.
        """
        positions = np.asarray(positions, float)
        self.budget.charge(self.pilot_length)
        H = channel_matrix(positions, self._scenario)
        Y = np.sqrt(self.transmit_power_w) * H @ self.pilot_matrix
        return Y + self._noise(Y.shape)

    def received_power_probe(self, positions) -> float:
        """Received power ||y||^2 for a single unit pilot symbol (K = 1 only).

        Charges 1 pilot symbol.
        """
        if self.num_users != 1:
            raise UsageError("power probe is defined for single-user scenarios")
        positions = np.asarray(positions, float)
        self.budget.charge(1)
        h = channel_matrix(positions, self._scenario)[:, 0]
        y = np.sqrt(self.transmit_power_w) * h + self._noise(h.shape)
        return float(np.real(np.vdot(y, y)))


def ls_estimate(received, pilots, transmit_power_w: float):
    """Least-squares channel estimate from a received pilot block.

    Solves min_H || Y - sqrt(P) H S ||_F^2, i.e.
    H = Y S^H (S S^H)^{-1} / sqrt(P). Requires a full-row-rank S.
    """
    Y = np.asarray(received, complex)
    S = np.asarray(pilots, complex)
    K, T = S.shape
    if T < K or np.linalg.matrix_rank(S) < K:
        raise SingularPilot("pilot matrix must have full row rank (T >= K)")
    gram = S @ S.conj().T
    B = Y @ S.conj().T / np.sqrt(transmit_power_w)
    # right-division by the Hermitian Gram matrix
    return np.linalg.solve(gram.T, B.T).T
