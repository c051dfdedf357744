"""Seeded Monte Carlo experiment harness.

A sweep is the cartesian product of methods, axis values and trials. Every
trial draws a fresh scenario from (master_seed, trial_index), runs one
method inside its pilot budget, and reports the sum rate of the *final*
positions evaluated on the true channel with the MMSE combiner. The
optimizers themselves never see that evaluation; they live off pilot
measurements alone.

Reported CSV rows are written in deterministic task order, so a fixed
config and seed reproduce the output byte for byte regardless of the number
of worker processes (wall-clock times are kept on the in-memory records
only, never in the file).
"""

from __future__ import annotations

import multiprocessing
import os
import time
from dataclasses import dataclass, fields

import numpy as np

from .baselines import PsoConfig, fpa_layout, pso_upper_bound, random_position_selection
from .environment import PilotBudget, PilotConfig, PilotEnvironment, dbm_to_watts
from .errors import ConfigError
from .objectives import rate_report
from .scenario import (CarrierConfig, MovableRegion, ScenarioConfig,
                       batch_channel_matrix, channel_matrix, generate_scenario)
from .zo_optimizer import ZOConfig, optimize_multi_user, optimize_single_user

KNOWN_METHODS = ("dfpo", "fpa", "rps", "pso_ub")
KNOWN_AXES = ("pilots", "power_dbm", "paths", "antennas")
_METHOD_CODE = {name: i + 1 for i, name in enumerate(KNOWN_METHODS)}
WORKERS_ENV_VAR = "DFPO_WORKERS"

CSV_HEADER = "method,axis,axis_value,trial,sum_rate_bps_hz,pilots_consumed"


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep definition; loadable from a flat key=value preset file."""

    users: int = 1
    antennas: int = 4
    paths: int = 70
    power_dbm: float = -5.0
    noise_dbm: float = -90.0
    carrier_hz: float = 5e9
    region_wavelengths: float = 4.0
    min_distance_wavelengths: float = 0.25
    distance_min_m: float = 20.0
    distance_max_m: float = 100.0
    pathloss_ref_db: float = -25.0
    pathloss_exponent: float = 2.0
    methods: tuple = ("dfpo",)
    axis: str = "pilots"
    axis_values: tuple = (100,)
    trials: int = 1
    master_seed: int = 0
    pilot_length: int = 0        # 0: K + 1 for multi-user, 1 for single-user
    init_candidates: int = 0     # 0: derived split (40% of the budget)
    iterations: int = 0
    step_wavelengths: float = 0.02
    smoothing_wavelengths: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.99
    direction_mode: str = "sphere"
    rps_candidates: int = 0      # 0: matched pilot budget
    pso_swarm: int = 50
    pso_iterations: int = 200
    out: str = "results.csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("need at least one trial")
        if self.axis not in KNOWN_AXES:
            raise ConfigError(f"axis must be one of {KNOWN_AXES}")
        if not self.axis_values:
            raise ConfigError("axis_values must be non-empty")
        for m in self.methods:
            if m not in KNOWN_METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if self.users < 1 or self.antennas < 1 or self.paths < 1:
            raise ConfigError("users, antennas and paths must be >= 1")
        if self.axis == "pilots" and (self.init_candidates or self.iterations):
            raise ConfigError(
                "a pilot sweep derives its budget split; drop "
                "init_candidates/iterations from the config")

    @property
    def wavelength_m(self) -> float:
        return CarrierConfig.from_frequency(self.carrier_hz).wavelength_m

    @property
    def region(self) -> MovableRegion:
        return MovableRegion(self.region_wavelengths * self.wavelength_m / 2)

    @property
    def min_distance_m(self) -> float:
        return self.min_distance_wavelengths * self.wavelength_m


def _convert(name: str, raw: str, target_type):
    raw = raw.strip()
    try:
        if name == "methods":
            return tuple(part.strip() for part in raw.split(",") if part.strip())
        if name == "axis_values":
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as err:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from err


def load_config(path, **overrides) -> ExperimentConfig:
    """Parse a flat ``key = value`` preset file ('#' starts a comment)."""
    types = {f.name: type(getattr(ExperimentConfig, f.name))
             for f in fields(ExperimentConfig)}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _convert(key, raw, types[key])
    values.update(overrides)
    return ExperimentConfig(**values)


@dataclass
class ResultRow:
    method: str
    axis: str
    axis_value: float
    trial: int
    sum_rate_bps_hz: float
    pilots_consumed: int
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class _TrialSetup:
    """Config resolved at one axis value."""

    users: int
    antennas: int
    paths: int
    power_w: float
    noise_w: float
    pilot_length: int
    init_candidates: int
    iterations: int
    budget_cap: int
    rps_candidates: int


def default_budget_split(total_pilots: int, cost_per_eval: int):
    """40% of the evaluation budget on initialization, the rest on iterations.

    The init phase is cheap exploration (one evaluation per candidate) and
    protects against bad basins; at desk scale a 40/60 split beat both
    iteration-heavy and pure-exploration splits across budgets.
    """
    blocks = total_pilots // cost_per_eval
    if blocks < 1:
        raise ConfigError("pilot budget below the cost of a single evaluation")
    init = max(1, int(np.ceil(0.4 * blocks)))
    iters = max(0, (blocks - init) // 2)
    return init, iters


def resolve_setup(config: ExperimentConfig, axis_value) -> _TrialSetup:
    users = config.users
    antennas = config.antennas
    paths = config.paths
    power_dbm = config.power_dbm
    if config.axis == "power_dbm":
        power_dbm = float(axis_value)
    elif config.axis == "paths":
        paths = int(axis_value)
    elif config.axis == "antennas":
        antennas = int(axis_value)

    pilot_length = config.pilot_length
    if pilot_length == 0:
        pilot_length = 1 if users == 1 else users + 1
    cost = 1 if users == 1 else pilot_length

    if config.axis == "pilots":
        total = int(axis_value)
        init, iters = default_budget_split(total, cost)
    else:
        # fixed-budget sweeps default to the standard budgets (100 symbols
        # single-user, 160 multi-user) under the same 40/60 split
        d_init, d_iters = default_budget_split(100 if users == 1 else 40 * cost, cost)
        init = config.init_candidates or d_init
        iters = config.iterations or d_iters
    budget_cap = cost * (init + 2 * iters)

    rps = config.rps_candidates or budget_cap // cost
    return _TrialSetup(users=users, antennas=antennas, paths=paths,
                       power_w=dbm_to_watts(power_dbm),
                       noise_w=dbm_to_watts(config.noise_dbm),
                       pilot_length=pilot_length, init_candidates=init,
                       iterations=iters, budget_cap=budget_cap,
                       rps_candidates=rps)


def evaluate_sum_rate(scenario, positions, noise_power_w, transmit_power_w) -> float:
    """True-channel MMSE sum rate of a final layout (evaluation privilege)."""
    H = channel_matrix(positions, scenario)
    return rate_report(H, None, noise_power_w, transmit_power_w).sum_rate


def run_trial(config: ExperimentConfig, method: str, axis_value, trial_index: int) -> ResultRow:
    """Run one (method, axis value, trial) cell and score it."""
    t0 = time.perf_counter()
    setup = resolve_setup(config, axis_value)
    try:
        axis_index = list(config.axis_values).index(axis_value)
    except ValueError:
        axis_index = 0
    wavelength = config.wavelength_m
    region = config.region
    min_distance = config.min_distance_m

    scen_cfg = ScenarioConfig(
        num_users=setup.users, num_paths=setup.paths,
        distance_range_m=(config.distance_min_m, config.distance_max_m),
        pathloss_ref_db=config.pathloss_ref_db,
        pathloss_exponent=config.pathloss_exponent,
        carrier=CarrierConfig.from_frequency(config.carrier_hz))
    scenario = generate_scenario(scen_cfg, [config.master_seed, trial_index])

    code = _METHOD_CODE[method]
    env_seed = [config.master_seed, trial_index, axis_index, code, 1]
    algo_seed = [config.master_seed, trial_index, axis_index, code, 2]

    consumed = 0
    if method == "fpa":
        positions = fpa_layout(setup.antennas, wavelength, region)
    elif method == "pso_ub":
        pso_cfg = PsoConfig(swarm_size=config.pso_swarm, iterations=config.pso_iterations)
        positions = pso_upper_bound(scenario, region, setup.antennas, min_distance,
                                    pso_cfg, algo_seed, noise_power_w=setup.noise_w,
                                    transmit_power_w=setup.power_w)
    else:
        pilot_cfg = PilotConfig(setup.power_w, setup.noise_w, setup.pilot_length)
        env = PilotEnvironment(scenario, pilot_cfg,
                               PilotBudget(setup.budget_cap), seed=env_seed)
        if method == "rps":
            positions = random_position_selection(env, region, setup.antennas,
                                                  setup.rps_candidates,
                                                  min_distance, algo_seed)
        else:
            zo_cfg = ZOConfig.for_wavelength(
                wavelength, setup.init_candidates, setup.iterations,
                step_size_m=config.step_wavelengths * wavelength,
                smoothing_m=config.smoothing_wavelengths * wavelength,
                min_distance_m=min_distance, beta1=config.beta1,
                beta2=config.beta2, direction_mode=config.direction_mode)
            if setup.users == 1:
                positions, _ = optimize_single_user(env, region, setup.antennas,
                                                    zo_cfg, algo_seed)
            else:
                positions, _ = optimize_multi_user(env, region, setup.antennas,
                                                   zo_cfg, algo_seed)
        consumed = env.budget.consumed

    rate = evaluate_sum_rate(scenario, positions, setup.noise_w, setup.power_w)
    return ResultRow(method=method, axis=config.axis, axis_value=axis_value,
                     trial=trial_index, sum_rate_bps_hz=rate,
                     pilots_consumed=consumed,
                     wall_time_s=time.perf_counter() - t0)


def _fmt_axis_value(value) -> str:
    f = float(value)
    return str(int(f)) if f == int(f) else repr(f)


def format_row(row: ResultRow) -> str:
    return (f"{row.method},{row.axis},{_fmt_axis_value(row.axis_value)},"
            f"{row.trial},{repr(row.sum_rate_bps_hz)},{row.pilots_consumed}")


def _worker(args):
    config, method, axis_value, trial = args
    return run_trial(config, method, axis_value, trial)


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        try:
            n = int(env)
        except ValueError as err:
            raise ConfigError(f"{WORKERS_ENV_VAR} must be an integer") from err
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV_VAR} must be >= 1")
        return n
    return os.cpu_count() or 1


def run_sweep(config: ExperimentConfig, out_path=None, workers: int | None = None):
    """Run the full sweep, stream rows to CSV in task order, return the rows.

    Tasks run on a process pool sized by ``workers`` (default: the
    DFPO_WORKERS environment variable, then the CPU count). Results are
    written strictly in task order and flushed per row, so interrupted runs
    leave a clean prefix and repeated runs are byte-identical.
    """
    tasks = [(config, method, axis_value, trial)
             for method in config.methods
             for axis_value in config.axis_values
             for trial in range(config.trials)]
    if workers is None:
        workers = worker_count()
    workers = min(workers, len(tasks))

    out_path = out_path or config.out
    rows = []
    out_dir = os.path.dirname(out_path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.flush()

        def consume(results):
            for row in results:
                rows.append(row)
                fh.write(format_row(row) + "\n")
                fh.flush()

        if workers > 1:
            with multiprocessing.Pool(workers) as pool:
                consume(pool.imap(_worker, tasks))
        else:
            consume(_worker(t) for t in tasks)
    return rows


def snr_surface(scenario, noise_power_w: float, transmit_power_w: float,
                region: MovableRegion, resolution: int):
    """Receive SNR of a single probe antenna over an N x N grid of the region.

    Returns (xs, ys, snr_db) with snr_db[i, j] at (xs[i], ys[j]).
    """
    if scenario.num_users != 1:
        raise ConfigError("the SNR surface is defined for single-user scenarios")
    h = region.half_width_m
    xs = np.linspace(-h, h, resolution)
    ys = np.linspace(-h, h, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)[:, None, :]
    resp = batch_channel_matrix(pts, scenario)[:, 0, 0]
    snr = transmit_power_w * np.abs(resp) ** 2 / noise_power_w
    snr_db = 10.0 * np.log10(snr).reshape(resolution, resolution)
    return xs, ys, snr_db


def write_surface_csv(path, xs, ys, snr_db):
    out_dir = os.path.dirname(path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("x,y,snr_db\n")
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                fh.write(f"{repr(float(x))},{repr(float(y))},{repr(float(snr_db[i, j]))}\n")
