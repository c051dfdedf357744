"""Derivative-free position optimization with adaptive-momentum updates.

The optimizer never sees channel coefficients. Each iteration probes the
environment at the current position vector and at a nearby point shifted by
``smoothing * u`` along a random direction ``u``, forms the scaled
one-sided difference

    g = (dim / smoothing) * (f_probe - f_base) * u,        dim = 2M,

and feeds it to an Adam-style update with bias-corrected first/second
moments. Iterates are clamped to the movable region after every step and
the minimum-spacing refinement runs once at the end.

Probe values are normalized by the magnitude of the best initialization
score before differencing. The update direction is invariant to objective
scale, but the small guard added to sqrt(v) is not; without normalization
it would swamp gradients of raw-watt objectives (1e-12 W noise floors).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import AvailableGridExhausted, ConfigError, UsageError
from .refinement import refine_positions
from .scenario import MovableRegion
from .environment import ls_estimate
from .objectives import multi_user_mse_objective


@dataclass(frozen=True)
class ZOConfig:
    """Hyperparameters of the position optimizer.

    Lengths (step size, smoothing, minimum distance) are metres; the
    wavelength-relative defaults come from :meth:`for_wavelength`.
    """

    step_size_m: float
    smoothing_m: float
    min_distance_m: float
    init_candidates: int
    iterations: int
    init_spacing_m: float = 0.0  # 0: use min_distance_m for candidate layouts
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon_guard: float = 1e-8
    direction_mode: str = "sphere"

    def __post_init__(self):
        if not (0 < self.beta1 <= 1 and 0 < self.beta2 <= 1):
            raise ConfigError("beta1, beta2 must lie in (0, 1]")
        if not (self.step_size_m > 0 and self.smoothing_m > 0 and self.min_distance_m > 0):
            raise ConfigError("step size, smoothing and min distance must be positive")
        if self.init_spacing_m < 0:
            raise ConfigError("init spacing must be nonnegative")
        if self.init_candidates < 1 or self.iterations < 0:
            raise ConfigError("need at least one candidate and a nonnegative iteration count")
        if not self.epsilon_guard > 0:
            raise ConfigError("epsilon guard must be positive")
        if self.direction_mode not in ("sphere", "coordinate"):
            raise ConfigError("direction mode must be 'sphere' or 'coordinate'")

    @classmethod
    def for_wavelength(cls, wavelength_m: float, init_candidates: int, iterations: int,
                       **overrides) -> "ZOConfig":
        """Wavelength-relative defaults.

        Step 0.02*lam and smoothing 0.1*lam keep the update inside one fading
        basin while the probe difference stays above measurement noise;
        candidate layouts are spaced half a wavelength so antennas start in
        distinct basins. The hard spacing floor is lam/4.
        """
        params = dict(
            step_size_m=0.02 * wavelength_m,
            smoothing_m=0.1 * wavelength_m,
            min_distance_m=0.25 * wavelength_m,
            init_spacing_m=0.5 * wavelength_m,
            init_candidates=init_candidates,
            iterations=iterations,
        )
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class AdamState:
    """First/second moment vectors and the iteration counter."""

    m: np.ndarray
    v: np.ndarray
    t: int

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0)


@dataclass
class Trajectory:
    """Per-iteration record of one optimizer run."""

    positions: list = field(default_factory=list)       # (M, 2) iterates
    probe_base: list = field(default_factory=list)      # raw objective at iterate
    probe_perturbed: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)       # norm of the normalized ZO gradient
    budget_consumed: list = field(default_factory=list)
    initial_position: np.ndarray | None = None          # selected start layout
    initial_score: float | None = None                  # its measured objective

    def __len__(self):
        return len(self.positions)

    def to_csv(self, path):
        num_antennas = self.positions[0].shape[0] if self.positions else 0
        header = ["iteration"]
        for m in range(1, num_antennas + 1):
            header += [f"x{m}", f"y{m}"]
        header += ["probe_base", "probe_perturbed", "grad_norm", "budget_consumed"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, pos in enumerate(self.positions):
                row = [i + 1] + [repr(c) for c in np.asarray(pos).ravel()]
                row += [repr(self.probe_base[i]), repr(self.probe_perturbed[i]),
                        repr(self.grad_norm[i]), self.budget_consumed[i]]
                writer.writerow(row)


def sample_direction(dim: int, mode: str, rng):
    """Random search direction: uniform on the unit sphere, or a basis vector."""
    if mode == "sphere":
        while True:
            v = rng.standard_normal(dim)
            norm = np.linalg.norm(v)
            if norm > 1e-12:
                return v / norm
    if mode == "coordinate":
        u = np.zeros(dim)
        u[rng.integers(dim)] = 1.0
        return u
    raise ConfigError(f"unknown direction mode {mode!r}")


def zo_gradient(f_base, f_probe, direction, smoothing_m: float, dim: int):
    """One-sided directional gradient estimate (dim / mu) * (f+ - f) * u."""
    return (dim / smoothing_m) * (f_probe - f_base) * direction


def adamm_step(state: AdamState, grad, cfg: ZOConfig):
    """One adaptive-momentum update; returns the new state and the step.

    The caller applies the sign (add the step for ascent, subtract for
    descent). When beta == 1 the bias-correction denominator vanishes; the
    moment is zero then, so the uncorrected value is used.
    """
    g = np.asarray(grad, float)
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    t = state.t + 1
    c1 = 1.0 - cfg.beta1 ** t
    c2 = 1.0 - cfg.beta2 ** t
    m_hat = m / c1 if c1 > 0 else m
    v_hat = v / c2 if c2 > 0 else v
    delta = cfg.step_size_m * m_hat / (np.sqrt(v_hat) + cfg.epsilon_guard)
    return AdamState(m, v, t), delta


def boundary_project(positions, region: MovableRegion):
    """Clamp every coordinate into [-A/2, A/2]."""
    return region.clip(positions)


def select_initial_position(candidates, evaluator, maximize: bool = True):
    """Score every candidate position vector and keep the best.

    ``evaluator`` is charged for whatever measurements it makes. Ties keep
    the earliest candidate. Returns (position, score).
    """
    if len(candidates) < 1:
        raise UsageError("need at least one initial candidate")
    best_pos, best_score = None, None
    for cand in candidates:
        score = evaluator(cand)
        better = best_score is None or (score > best_score if maximize else score < best_score)
        if better:
            best_pos, best_score = cand, score
    return np.array(best_pos, float), best_score


def _feasible_candidates(region, num_antennas, cfg, rng):
    # candidates are drawn feasible, spaced init_spacing_m apart (one antenna
    # per fading basin); falls back to the hard floor when the region cannot
    # host that spacing
    spacing = cfg.init_spacing_m or cfg.min_distance_m
    out = []
    for _ in range(cfg.init_candidates):
        draw = region.sample(rng, num_antennas)
        try:
            out.append(refine_positions(draw, spacing, region, rng))
        except AvailableGridExhausted:
            out.append(refine_positions(draw, cfg.min_distance_m, region, rng))
    return out


def _run_adamm(evaluator, initial, initial_score, cfg: ZOConfig,
               region: MovableRegion, rng, maximize: bool, budget):
    position = np.array(initial, float)
    dim = position.size
    scale = abs(initial_score) if initial_score != 0 else 1.0
    state = AdamState.zeros(dim)
    sign = 1.0 if maximize else -1.0
    traj = Trajectory(initial_position=np.array(initial, float),
                      initial_score=initial_score)
    for _ in range(cfg.iterations):
        u = sample_direction(dim, cfg.direction_mode, rng)
        f_base = evaluator(position)
        f_probe = evaluator(position + cfg.smoothing_m * u.reshape(position.shape))
        g = zo_gradient(f_base / scale, f_probe / scale, u, cfg.smoothing_m, dim)
        state, delta = adamm_step(state, g, cfg)
        position = boundary_project(position + sign * delta.reshape(position.shape), region)
        traj.positions.append(position.copy())
        traj.probe_base.append(f_base)
        traj.probe_perturbed.append(f_probe)
        traj.grad_norm.append(float(np.linalg.norm(g)))
        traj.budget_consumed.append(budget.consumed)
    return position, traj


def optimize_single_user(env, region: MovableRegion, num_antennas: int,
                         cfg: ZOConfig, seed):
    """Position optimization against received power (single-user uplink).

    Draws ``init_candidates`` random layouts, keeps the one with the highest
    probed power, then runs ``iterations`` ascent steps with two power
    probes each. Consumes exactly init_candidates + 2 * iterations pilot
    symbols. Returns the refined final layout and the trajectory.
    """
    if env.num_users != 1:
        raise UsageError("single-user optimizer needs a K = 1 environment")
    rng = np.random.default_rng(seed)
    candidates = _feasible_candidates(region, num_antennas, cfg, rng)
    start, score = select_initial_position(candidates, env.received_power_probe,
                                           maximize=True)
    final, traj = _run_adamm(env.received_power_probe, start, score, cfg,
                             region, rng, maximize=True, budget=env.budget)
    final = refine_positions(final, cfg.min_distance_m, region, rng)
    return final, traj


def optimize_multi_user(env, region: MovableRegion, num_antennas: int,
                        cfg: ZOConfig, seed):
    """Position optimization against the estimated sum-MSE surrogate.

    Every objective evaluation sends one T-symbol pilot block, forms the
    least-squares channel estimate and prices the sum-MSE surrogate on it;
    the loop descends. Consumes exactly T * (init_candidates + 2 * iterations)
    pilot symbols.
    """
    if env.num_users < 2:
        raise UsageError("multi-user optimizer needs K >= 2")
    if env.num_users > num_antennas:
        raise UsageError("sum-MSE surrogate needs K <= M")

    def estimated_mse(positions):
        Y = env.receive_pilots(positions)
        H_hat = ls_estimate(Y, env.pilot_matrix, env.transmit_power_w)
        return multi_user_mse_objective(H_hat, env.noise_power_w, env.transmit_power_w)

    rng = np.random.default_rng(seed)
    candidates = _feasible_candidates(region, num_antennas, cfg, rng)
    start, score = select_initial_position(candidates, estimated_mse, maximize=False)
    final, traj = _run_adamm(estimated_mse, start, score, cfg, region, rng,
                             maximize=False, budget=env.budget)
    final = refine_positions(final, cfg.min_distance_m, region, rng)
    return final, traj
