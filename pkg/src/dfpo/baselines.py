"""Comparison schemes: fixed planar array, random position selection, and a
perfect-knowledge particle-swarm upper bound.

The swarm baseline is deliberately privileged: it prices candidate layouts
on the true channel parameters, bypassing the pilot interface, and serves as
a performance ceiling for the measurement-driven methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UsageError
from .objectives import batch_mse_objective, rate_report
from .environment import ls_estimate
from .refinement import refine_positions
from .scenario import MovableRegion, ScenarioParams, batch_channel_matrix


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 50
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    iterations: int = 200
    velocity_cap_m: float | None = None  # None: a quarter of the region width

    def __post_init__(self):
        if self.swarm_size < 1 or self.iterations < 0:
            raise ConfigError("swarm size must be >= 1 and iterations >= 0")
        if min(self.inertia, self.cognitive, self.social) < 0:
            raise ConfigError("PSO coefficients must be nonnegative")


def fpa_layout(num_antennas: int, wavelength_m: float, region: MovableRegion):
    """Centred uniform planar array with half-wavelength spacing.

    Uses the most-square factorization M = m1 * m2 (m1 <= m2); a prime M
    degenerates to a single row.
    """
    if num_antennas < 1:
        raise ConfigError("need at least one antenna")
    m1 = 1
    for d in range(int(np.sqrt(num_antennas)), 0, -1):
        if num_antennas % d == 0:
            m1 = d
            break
    m2 = num_antennas // m1
    spacing = wavelength_m / 2
    xs = (np.arange(m2) - (m2 - 1) / 2) * spacing
    ys = (np.arange(m1) - (m1 - 1) / 2) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel()])
    if not region.contains(pos):
        raise ConfigError(
            f"{m1}x{m2} array at lambda/2 spacing does not fit the region")
    return pos


def random_position_selection(env, region: MovableRegion, num_antennas: int,
                              num_candidates: int, min_distance_m: float, seed):
    """Draw feasible random layouts, measure each, keep the best.

    Single-user environments score candidates by one received-power probe
    (1 pilot symbol each); multi-user environments estimate the channel from
    one pilot block (T symbols each) and score by the MMSE sum rate.
    """
    if num_candidates < 1:
        raise UsageError("need at least one candidate")
    rng = np.random.default_rng(seed)
    single = env.num_users == 1
    best_pos, best_score = None, -np.inf
    for _ in range(num_candidates):
        cand = refine_positions(region.sample(rng, num_antennas),
                                min_distance_m, region, rng)
        if single:
            score = env.received_power_probe(cand)
        else:
            Y = env.receive_pilots(cand)
            H_hat = ls_estimate(Y, env.pilot_matrix, env.transmit_power_w)
            score = rate_report(H_hat, None, env.noise_power_w,
                                env.transmit_power_w).sum_rate
        if score > best_score:
            best_pos, best_score = cand, score
    return best_pos


def _pso_minimize(batch_objective, dim: int, half_width: float, cfg: PsoConfig, rng):
    """Global-best PSO over the box [-half_width, half_width]^dim.

    ``batch_objective`` maps an (n, dim) array to n objective values.
    Velocities start at zero and are clamped to +-velocity cap; positions
    are clamped to the box after every move.
    """
    cap = cfg.velocity_cap_m if cfg.velocity_cap_m is not None else half_width / 2
    x = rng.uniform(-half_width, half_width, (cfg.swarm_size, dim))
    v = np.zeros_like(x)
    fx = np.asarray(batch_objective(x), float)
    pbest, pbest_f = x.copy(), fx.copy()
    g = int(np.argmin(fx))
    gbest, gbest_f = x[g].copy(), float(fx[g])
    for _ in range(cfg.iterations):
        r1 = rng.random((cfg.swarm_size, dim))
        r2 = rng.random((cfg.swarm_size, dim))
        v = (cfg.inertia * v
             + cfg.cognitive * r1 * (pbest - x)
             + cfg.social * r2 * (gbest[None, :] - x))
        v = np.clip(v, -cap, cap)
        x = np.clip(x + v, -half_width, half_width)
        fx = np.asarray(batch_objective(x), float)
        improved = fx < pbest_f
        pbest[improved] = x[improved]
        pbest_f[improved] = fx[improved]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
    return gbest, gbest_f


def pso_upper_bound(scenario: ScenarioParams, region: MovableRegion,
                    num_antennas: int, min_distance_m: float, cfg: PsoConfig,
                    seed, noise_power_w: float | None = None,
                    transmit_power_w: float | None = None):
    """Best-found layout under the true channel (perfect-knowledge ceiling).

    Single-user scenarios maximize channel power; multi-user scenarios
    minimize the sum-MSE surrogate, which needs the noise and transmit
    powers. The returned layout is spacing-refined.
    """
    rng = np.random.default_rng(seed)
    dim = 2 * num_antennas

    if scenario.num_users == 1:
        def batch_objective(flat):
            H = batch_channel_matrix(flat.reshape(-1, num_antennas, 2), scenario)
            return -np.sum(np.abs(H[:, :, 0]) ** 2, axis=1)
    else:
        if noise_power_w is None or transmit_power_w is None:
            raise UsageError("multi-user upper bound needs noise and transmit powers")

        def batch_objective(flat):
            H = batch_channel_matrix(flat.reshape(-1, num_antennas, 2), scenario)
            return batch_mse_objective(H, noise_power_w, transmit_power_w)

    best, _ = _pso_minimize(batch_objective, dim, region.half_width_m, cfg, rng)
    return refine_positions(best.reshape(num_antennas, 2), min_distance_m, region, rng)
