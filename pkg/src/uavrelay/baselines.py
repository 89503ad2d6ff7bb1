"""Benchmark placement schemes.

Four comparison points for the joint optimizer, all scored in the actual
LoS/NLoS environment with the closed-form power split applied at the chosen
position:

* ``es3d``: exhaustive search over a 3-D lattice; the performance upper
  bound at lattice resolution.
* ``es2d``: the same search restricted to one altitude.
* ``center``: hover over the area center at the lowest unshaded altitude.
* ``free``: geography-blind positioning at a fixed altitude; the optimizer
  assumes line of sight everywhere and the environment then decides what it
  actually gets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .channel import min_capacity_actual, min_capacity_many
from .lagrangian import SolverConfig, inner_loop, prepare_regions
from .power import allocate, allocate_many

DEFAULT_SPACING_M = 5.0
DEFAULT_ALTITUDE_M = 100.0


@dataclass
class BaselineResult:
    scheme: str
    position: np.ndarray
    p_bs: float
    p_ues: np.ndarray
    min_capacity_bps: float
    spacing_m: float | None = None
    altitude_m: float | None = None


def _evaluate_lattice(points: np.ndarray, scenario) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Score every lattice point; ties go to the lowest (z, y, x)."""
    if len(points) == 0:
        raise ValueError("empty search lattice")
    p_bs, p_ues = allocate_many(points, scenario)
    caps = min_capacity_many(points, p_bs, p_ues, scenario)
    best = np.max(caps)
    tied = np.flatnonzero(caps == best)
    order = np.lexsort((points[tied, 0], points[tied, 1], points[tied, 2]))
    idx = int(tied[order[0]])
    return idx, caps, p_bs, p_ues


def _axis(limit: float, spacing: float) -> np.ndarray:
    return np.arange(0.0, limit + 1e-9, spacing)


def es3d(scenario, spacing: float = DEFAULT_SPACING_M) -> BaselineResult:
    """Exhaustive search over the full flight box."""
    if spacing <= 0:
        raise ValueError("lattice spacing must be positive")
    b = scenario.bounds
    zs = np.arange(b.h_min_m, b.h_max_m + 1e-9, spacing)
    X, Y, Z = np.meshgrid(_axis(b.x_m, spacing), _axis(b.y_m, spacing), zs,
                          indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    idx, caps, p_bs, p_ues = _evaluate_lattice(pts, scenario)
    return BaselineResult("es3d", pts[idx], float(p_bs[idx]), p_ues[idx],
                          float(caps[idx]), spacing_m=spacing)


def es2d(scenario, altitude: float = DEFAULT_ALTITUDE_M,
         spacing: float = DEFAULT_SPACING_M) -> BaselineResult:
    """Exhaustive search over one horizontal plane."""
    if spacing <= 0:
        raise ValueError("lattice spacing must be positive")
    b = scenario.bounds
    X, Y = np.meshgrid(_axis(b.x_m, spacing), _axis(b.y_m, spacing),
                       indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(),
                           np.full(X.size, float(altitude))])
    idx, caps, p_bs, p_ues = _evaluate_lattice(pts, scenario)
    return BaselineResult("es2d", pts[idx], float(p_bs[idx]), p_ues[idx],
                          float(caps[idx]), spacing_m=spacing,
                          altitude_m=float(altitude))


def center(scenario, step: float = 1.0) -> BaselineResult:
    """Area center at the lowest altitude clear of every shadow region."""
    regions, _ = prepare_regions(scenario)
    b = scenario.bounds
    xy = (0.5 * b.x_m, 0.5 * b.y_m)
    alt = geometry.lowest_clear_altitude(xy, regions, b, step=step)
    pos = np.array([xy[0], xy[1], alt])
    alloc = allocate(pos, scenario)
    cap = min_capacity_actual(pos, alloc.p_bs, alloc.p_ues, scenario)
    return BaselineResult("center", pos, alloc.p_bs, alloc.p_ues, cap,
                          altitude_m=alt)


def free(scenario, altitude: float = DEFAULT_ALTITUDE_M,
         config: SolverConfig | None = None) -> BaselineResult:
    """Geography-blind horizontal positioning at a fixed altitude.

    Runs the same BCD/SCA descent as the main solver but with no shadow
    constraints and no relaxation variables; the returned capacity is what
    the environment actually grants at the chosen spot.
    """
    cfg = config or SolverConfig()
    b = scenario.bounds
    x0 = np.array([0.5 * b.x_m, 0.5 * b.y_m, float(altitude)])
    res = inner_loop(x0, [], np.zeros(0), [], 1.0, scenario, cfg,
                     fixed_alt=float(altitude))
    cap = min_capacity_actual(res.x, res.alloc.p_bs, res.alloc.p_ues, scenario)
    return BaselineResult("free", res.x, res.alloc.p_bs, res.alloc.p_ues, cap,
                          altitude_m=float(altitude))
