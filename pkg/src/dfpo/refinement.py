"""Minimum inter-antenna distance enforcement by grid projection.

The optimizer relaxes the pairwise spacing constraint while it iterates;
afterwards, antennas that ended up closer than the minimum distance are
snapped onto a randomly-offset square lattice with pitch equal to that
distance. Compliant antennas are never moved. Lattice points adjacent to a
compliant antenna (closer than the pitch) count as occupied, violators are
assigned their nearest free lattice point in ascending antenna order, ties
broken lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AvailableGridExhausted, ConfigError, GridEmpty
from .scenario import MovableRegion


@dataclass(frozen=True)
class RefinementSets:
    violators: tuple
    compliant: tuple


@dataclass(frozen=True)
class GridSpec:
    """Square lattice clipped to the region; ``points`` sorted by (x, y)."""

    origin: np.ndarray
    spacing: float
    points: np.ndarray


def classify_antennas(positions, min_distance: float) -> RefinementSets:
    """Split antenna indices into spacing violators and compliant ones."""
    if not min_distance > 0:
        raise ConfigError("minimum distance must be positive")
    pos = np.asarray(positions, float)
    M = pos.shape[0]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    np.fill_diagonal(dist, np.inf)
    bad = np.min(dist, axis=1) < min_distance if M > 1 else np.zeros(M, bool)
    idx = np.arange(M)
    return RefinementSets(tuple(idx[bad]), tuple(idx[~bad]))


def build_grid(region: MovableRegion, spacing: float, rng) -> GridSpec:
    """Lattice with random origin inside the region, points kept inside it."""
    if not spacing > 0:
        raise ConfigError("grid spacing must be positive")
    origin = rng.uniform(-region.half_width_m, region.half_width_m, 2)
    h = region.half_width_m
    tol = 1e-9 * max(spacing, h)
    pts = []
    for o in origin:
        kmin = int(np.ceil((-h - o) / spacing - 1e-9))
        kmax = int(np.floor((h - o) / spacing + 1e-9))
        pts.append(o + spacing * np.arange(kmin, kmax + 1))
    if len(pts[0]) == 0 or len(pts[1]) == 0:
        raise GridEmpty("spacing too large for the region")
    xs, ys = np.meshgrid(pts[0], pts[1], indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel()])
    points = points[np.all(np.abs(points) <= h + tol, axis=1)]
    if points.shape[0] == 0:
        raise GridEmpty("no lattice point inside the region")
    order = np.lexsort((points[:, 1], points[:, 0]))
    return GridSpec(origin=origin, spacing=spacing, points=points[order])


def _assign_violators(positions, sets: RefinementSets, grid: GridSpec, min_distance):
    out = np.array(positions, float)
    available = np.ones(grid.points.shape[0], bool)
    if sets.compliant:
        kept = out[list(sets.compliant)]
        d = np.linalg.norm(grid.points[:, None, :] - kept[None, :, :], axis=-1)
        available &= np.min(d, axis=1) >= min_distance
    for p in sets.violators:
        if not np.any(available):
            raise AvailableGridExhausted(f"no free grid point for antenna {p}")
        dist = np.linalg.norm(grid.points - out[p], axis=1)
        dist[~available] = np.inf
        # points are lexsorted, so argmin keeps the smallest (x, y) among ties
        best = int(np.argmin(dist))
        out[p] = grid.points[best]
        available[best] = False
    return out


def refine_positions(positions, min_distance: float, region: MovableRegion,
                     rng, max_retries: int = 8):
    """Return positions satisfying the pairwise minimum distance.

    Input positions are expected inside the region (the optimizer projects
    its iterates). If no violator exists the input is returned unchanged;
    otherwise violators are relocated onto a fresh lattice. A lattice whose
    free points run out is re-drawn with a new random origin, up to
    ``max_retries`` times.
    """
    pos = np.asarray(positions, float)
    sets = classify_antennas(pos, min_distance)
    if not sets.violators:
        return pos
    last_err = None
    for _ in range(max_retries):
        grid = build_grid(region, min_distance, rng)
        try:
            return _assign_violators(pos, sets, grid, min_distance)
        except AvailableGridExhausted as err:
            last_err = err
    raise AvailableGridExhausted(
        f"grid exhausted after {max_retries} origins: {last_err}")
