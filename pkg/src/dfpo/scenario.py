"""Far-field multipath channel model over a 2D movable-antenna region.

Geometry and conventions used throughout the package:

* Antenna positions are ``(M, 2)`` float arrays in metres, measured from the
  reference point at the centre of the square movable region
  ``[-A/2, A/2] x [-A/2, A/2]``.
* Each user's channel is a superposition of plane-wave paths. Moving an
  antenna from the reference point to ``(x, y)`` changes the propagation
  distance of a path with elevation ``theta`` and azimuth ``phi`` by
  ``x*cos(theta)*sin(phi) + y*sin(theta)``.
* The per-path phase factor carries a ``+j`` sign (phase advance); the scalar
  channel response conjugates it, so the response at position ``r`` is
  ``sum_l b_l * exp(-2j*pi/lambda * delta_l(r))``. The two signs are easy to
  conflate, keep them straight when editing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier frequency and the wavelength derived from it."""

    frequency_hz: float
    wavelength_m: float

    def __post_init__(self):
        if self.frequency_hz <= 0 or self.wavelength_m <= 0:
            raise ConfigError("carrier frequency and wavelength must be positive")
        expected = SPEED_OF_LIGHT / self.frequency_hz
        if abs(self.wavelength_m - expected) > 1e-9 * expected:
            raise ConfigError(
                f"wavelength {self.wavelength_m} inconsistent with "
                f"frequency {self.frequency_hz}"
            )

    @classmethod
    def from_frequency(cls, frequency_hz: float) -> "CarrierConfig":
        return cls(frequency_hz, SPEED_OF_LIGHT / frequency_hz)


@dataclass(frozen=True)
class MovableRegion:
    """Square region centred at the origin with side ``2 * half_width_m``."""

    half_width_m: float

    def __post_init__(self):
        if not self.half_width_m > 0:
            raise ConfigError("region half width must be positive")

    def contains(self, positions, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.asarray(positions)) <= self.half_width_m + atol))

    def clip(self, positions):
        return np.clip(np.asarray(positions, dtype=float),
                       -self.half_width_m, self.half_width_m)

    def sample(self, rng, num_points: int):
        """Uniform points in the region, shape (num_points, 2)."""
        return rng.uniform(-self.half_width_m, self.half_width_m, (num_points, 2))


def _readonly(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class UserChannelParams:
    """Path parameters of one user: arrays of length L plus the BS distance.

    ``gains`` are complex path amplitudes; angle arrays are radians in
    [-pi/2, pi/2].
    """

    elevations: np.ndarray
    azimuths: np.ndarray
    gains: np.ndarray
    distance_m: float

    def __post_init__(self):
        object.__setattr__(self, "elevations", _readonly(np.asarray(self.elevations, float)))
        object.__setattr__(self, "azimuths", _readonly(np.asarray(self.azimuths, float)))
        object.__setattr__(self, "gains", _readonly(np.asarray(self.gains, complex)))
        if self.elevations.ndim != 1 or self.elevations.shape != self.azimuths.shape \
                or self.elevations.shape != self.gains.shape:
            raise ConfigError("per-path arrays must be 1D with equal length")
        if self.num_paths < 1:
            raise ConfigError("a user needs at least one path")
        if not self.distance_m > 0:
            raise ConfigError("user distance must be positive")
        half_pi = np.pi / 2 + 1e-12
        if np.any(np.abs(self.elevations) > half_pi) or np.any(np.abs(self.azimuths) > half_pi):
            raise ConfigError("arrival angles must lie in [-pi/2, pi/2]")

    @property
    def num_paths(self) -> int:
        return self.elevations.shape[0]


@dataclass(frozen=True)
class ScenarioParams:
    """A full multi-user channel realization (hidden truth of a simulation)."""

    users: tuple
    carrier: CarrierConfig
    pathloss_ref: float
    pathloss_exponent: float
    rng_seed: tuple

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        seed = self.rng_seed
        if isinstance(seed, (int, np.integer)):
            seed = (int(seed),)
        object.__setattr__(self, "rng_seed", tuple(int(s) for s in seed))
        if self.num_users < 1:
            raise ConfigError("scenario needs at least one user")
        if not self.pathloss_ref > 0 or not self.pathloss_exponent > 0:
            raise ConfigError("path loss reference and exponent must be positive")

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def wavelength_m(self) -> float:
        return self.carrier.wavelength_m


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator settings for random scenarios."""

    num_users: int = 1
    num_paths: int = 70
    distance_range_m: tuple = (20.0, 100.0)
    pathloss_ref_db: float = -25.0
    pathloss_exponent: float = 2.0
    carrier: CarrierConfig = field(default_factory=lambda: CarrierConfig.from_frequency(5e9))

    def __post_init__(self):
        lo, hi = self.distance_range_m
        if not (0 < lo <= hi):
            raise ConfigError("distance range must satisfy 0 < min <= max")
        if self.num_paths < 1:
            raise ConfigError("need at least one path per user")
        if self.num_users < 1:
            raise ConfigError("need at least one user")
        if self.pathloss_exponent <= 0:
            raise ConfigError("path loss exponent must be positive")


def path_distance_delta(position, elevation, azimuth):
    """Change in propagation distance when an antenna moves to ``position``.

    Vectorizes over ``elevation``/``azimuth`` arrays.
    """
    x, y = position[0], position[1]
    return x * np.cos(elevation) * np.sin(azimuth) + y * np.sin(elevation)


def phase_variation_vector(position, user: UserChannelParams, wavelength_m: float):
    """Unit-modulus per-path phase factors at ``position``, length L."""
    delta = path_distance_delta(position, user.elevations, user.azimuths)
    return np.exp(2j * np.pi / wavelength_m * delta)


def channel_response(position, user: UserChannelParams, wavelength_m: float) -> complex:
    """Scalar channel between one user and an antenna at ``position``.

    Conjugate-transposes the phase factors before weighting by the path
    gains, hence the minus sign in the exponent.
    """
    return complex(np.vdot(phase_variation_vector(position, user, wavelength_m), user.gains))


def _user_column(xy, user: UserChannelParams, wavelength_m: float):
    # xy: (..., 2) -> responses (...,); minus sign from the conjugation above
    delta = (xy[..., 0, None] * (np.cos(user.elevations) * np.sin(user.azimuths))
             + xy[..., 1, None] * np.sin(user.elevations))
    return np.exp(-2j * np.pi / wavelength_m * delta) @ user.gains


def channel_matrix(positions, scenario: ScenarioParams):
    """M x K channel matrix for antennas at ``positions`` (shape (M, 2))."""
    return batch_channel_matrix(np.asarray(positions, float)[None, :, :], scenario)[0]


def batch_channel_matrix(positions, scenario: ScenarioParams):
    """Channel matrices for a batch of position vectors.

    ``positions`` has shape (..., M, 2); the result has shape (..., M, K).
    Used by the swarm optimizer and the surface/grid evaluators, where
    thousands of candidate layouts are priced at once.
    """
    xy = np.asarray(positions, float)
    lam = scenario.wavelength_m
    cols = [_user_column(xy, user, lam) for user in scenario.users]
    return np.stack(cols, axis=-1)


def generate_scenario(config: ScenarioConfig, seed) -> ScenarioParams:
    """Draw a random scenario: i.i.d. complex Gaussian path gains with
    per-path variance ``rho * d**-exponent / L``, angles uniform on
    [-pi/2, pi/2], user distances uniform on the configured range.
    """
    rng = np.random.default_rng(seed)
    rho = 10.0 ** (config.pathloss_ref_db / 10.0)
    lo, hi = config.distance_range_m
    users = []
    for _ in range(config.num_users):
        d = rng.uniform(lo, hi)
        L = config.num_paths
        elev = rng.uniform(-np.pi / 2, np.pi / 2, L)
        azim = rng.uniform(-np.pi / 2, np.pi / 2, L)
        var = rho * d ** (-config.pathloss_exponent) / L
        gains = rng.normal(0.0, np.sqrt(var / 2), (L, 2)) @ np.array([1.0, 1j])
        users.append(UserChannelParams(elev, azim, gains, d))
    seed_tuple = (seed,) if isinstance(seed, (int, np.integer)) else tuple(seed)
    return ScenarioParams(tuple(users), config.carrier, rho,
                          config.pathloss_exponent, seed_tuple)


def scenario_to_dict(scenario: ScenarioParams) -> dict:
    users = []
    for u in scenario.users:
        paths = [
            {"theta": float(t), "phi": float(p), "b_re": float(b.real), "b_im": float(b.imag)}
            for t, p, b in zip(u.elevations, u.azimuths, u.gains)
        ]
        users.append({"d": u.distance_m, "L": u.num_paths, "paths": paths})
    return {
        "seed": list(scenario.rng_seed),
        "K": scenario.num_users,
        "rho": scenario.pathloss_ref,
        "exponent": scenario.pathloss_exponent,
        "carrier_hz": scenario.carrier.frequency_hz,
        "users": users,
    }


def scenario_from_dict(data: dict) -> ScenarioParams:
    users = []
    for u in data["users"]:
        paths = u["paths"]
        if len(paths) != u["L"]:
            raise ConfigError("per-user path count does not match L")
        elev = np.array([p["theta"] for p in paths])
        azim = np.array([p["phi"] for p in paths])
        gains = np.array([p["b_re"] + 1j * p["b_im"] for p in paths])
        users.append(UserChannelParams(elev, azim, gains, float(u["d"])))
    if len(users) != data["K"]:
        raise ConfigError("user count does not match K")
    carrier = CarrierConfig.from_frequency(float(data["carrier_hz"]))
    return ScenarioParams(tuple(users), carrier, float(data["rho"]),
                          float(data["exponent"]), tuple(data["seed"]))


def save_scenario(scenario: ScenarioParams, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=1)


def load_scenario(path) -> ScenarioParams:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
