"""Two-loop relaxation driver for joint relay placement and power allocation.

The binary plane-selection variables of the shadow constraints are relaxed to
[0, 1] and their integrality defect sum_j l(1-l) is priced into the objective
with multipliers lambda_i.  The inner loop solves the priced problem by block
coordinate descent: closed-form power allocation, one trust-region SCA step
in (position, l), then an exact re-optimization of the l block alone (each l
block is a tiny separable problem over a box with one cardinality row, solved
at a vertex).  That last step keeps the priced objective honest: regions the
relay does not touch contribute exactly zero defect, so the subgradient only
pushes multipliers of planes that are actually violated.  The outer loop
updates the multipliers along the defect subgradient with the adaptive step
size gamma = mu * (q_U - q_L) / ||defect||^2 and halves mu whenever the upper
bound fails to decrease.

Objective bookkeeping runs in Mbit/s (capacities scaled by 1e-6); the
convergence thresholds are 0.01 in those units.  Public results are SI.

If the gap has not closed within the outer iteration budget, the driver
restarts from the lowest unshaded altitude above the area center, freezes
the plane selections observed there, and re-optimizes position and powers
only; by construction every iterate of that pass keeps line of sight, so it
always returns a feasible deployment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import geometry
from .channel import min_capacity_actual, min_capacity_los
from .power import PowerAllocation, allocate
from .sca import RATE_SCALE, clearance_eps, linearize, solve_subproblem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    inner_tol_mbps: float = 0.01
    outer_tol_mbps: float = 0.01
    max_inner: int = 30
    max_outer: int = 10
    rho0_m: float = 50.0
    rho_decay: float = 0.9
    lambda0: float = 1.0
    mu0: float = 2.0
    fallback_step_m: float = 1.0
    decrease_slack_mbps: float = 1e-9


@dataclass
class Solution:
    position: np.ndarray
    p_bs: float
    p_ues: np.ndarray
    min_capacity_bps: float  # actual LoS/NLoS environment
    feasible: bool
    converged: bool
    fallback_used: bool
    outer_iters: int
    inner_iters_total: int


@dataclass
class InnerRecord:
    t: int
    q_u_mbps: float
    step_m: float
    rho_m: float


@dataclass
class OuterRecord:
    T: int
    q_u_mbps: float
    q_l_mbps: float
    gap_mbps: float
    mu: float
    lambdas: np.ndarray
    x: np.ndarray
    inner: list


@dataclass
class IterationTrace:
    outer: list = field(default_factory=list)

    @property
    def inner_count(self) -> int:
        return sum(max(r.t for r in o.inner) for o in self.outer if o.inner)


@dataclass
class InnerResult:
    x: np.ndarray
    l: list
    alloc: PowerAllocation
    q_u_mbps: float
    records: list
    iterations: int


class FallbackInfeasibleError(RuntimeError):
    """The recovery column above the area center is shaded everywhere."""


def _defects(l_list) -> np.ndarray:
    return np.array([float(np.sum(np.asarray(l) * (1.0 - np.asarray(l))))
                     for l in l_list])


def _q_u_mbps(x, l_list, alloc, lam, scenario) -> float:
    rate = RATE_SCALE * min_capacity_los(x, alloc.p_bs, alloc.p_ues, scenario)
    if len(lam):
        rate -= float(lam @ _defects(l_list))
    return rate


_CLEAR_SLACK_M = 1e-6  # solver feasibility noise; far below the eps band


def _polish_region(margins: np.ndarray, eps: float, big_m: float) -> np.ndarray:
    """Exact minimizer of sum l(1-l) for one region at a fixed position.

    If some plane is satisfied with clearance, the defect is zero: that plane
    takes l = 0 and the rest 1.  Otherwise every l has a positive floor
    g = (eps - margin) / C; the objective is concave, so a vertex of
    {g <= l <= 1, sum l <= J-1} is optimal and they are few enough to
    enumerate.  Margins a rounding hair below the clearance count as clear,
    or solutions parked exactly on the clearance boundary would keep phantom
    defects alive.
    """
    J = len(margins)
    if np.max(margins) >= eps - _CLEAR_SLACK_M:
        l = np.ones(J)
        l[int(np.argmax(margins))] = 0.0
        return l
    g = np.clip((eps - margins) / big_m, 0.0, 1.0)
    cap = J - 1.0
    best, best_pen = None, np.inf
    for r in range(J + 1):
        for upper in combinations(range(J), r):
            base = g.copy()
            base[list(upper)] = 1.0
            for free in (None, *[j for j in range(J) if j not in upper]):
                l = base.copy()
                if free is not None:
                    slack = cap - (np.sum(l) - l[free])
                    if not (g[free] <= slack <= 1.0):
                        continue
                    l[free] = slack
                elif np.sum(l) > cap + 1e-12:
                    continue
                pen = float(np.sum(l * (1.0 - l)))
                if pen < best_pen - 1e-15:
                    best, best_pen = l, pen
    return best


def polish_l(x, regions, big_m: float, eps: float) -> list:
    """Best l block for every region at position x (exact, deterministic)."""
    return [_polish_region(r.margins(x), eps, big_m) for r in regions]


def inner_loop(x0, l0, lam, regions, big_m, scenario, cfg: SolverConfig, *,
               fixed_alt: float | None = None, frozen_l: list | None = None,
               bounds=None) -> InnerResult:
    """BCD/SCA descent for fixed multipliers; the priced objective never drops.

    Steps that fail to improve the true priced objective (possible only
    through solver rounding, the chain of bounds forbids it analytically)
    are rejected and terminate the loop at the current point.
    """
    bounds = bounds or scenario.bounds
    eps = clearance_eps(bounds)
    frozen = frozen_l is not None
    x = np.asarray(x0, dtype=float).copy()
    l_state = [np.asarray(li, dtype=float).copy() for li in (frozen_l if frozen else l0)]
    lam = np.asarray(lam, dtype=float)

    rho = cfg.rho0_m
    alloc = allocate(x, scenario)
    q_prev = _q_u_mbps(x, l_state, alloc, lam, scenario)
    records = [InnerRecord(t=0, q_u_mbps=q_prev, step_m=0.0, rho_m=rho)]
    iterations = 0

    for t in range(1, cfg.max_inner + 1):
        # regions out of reach of the trust ball cannot bind this step
        act = [i for i, r in enumerate(regions)
               if np.max(r.margins(x)) < eps + rho]
        if frozen:
            sol = solve_subproblem(
                linearize(x, alloc, scenario, rho),
                [regions[i] for i in act], [], np.zeros(0), bounds, big_m,
                scenario, fixed_alt=fixed_alt,
                frozen_l=[l_state[i] for i in act])
        else:
            sol = solve_subproblem(
                linearize(x, alloc, scenario, rho),
                [regions[i] for i in act], [l_state[i] for i in act],
                lam[act] if len(lam) else lam, bounds, big_m, scenario,
                fixed_alt=fixed_alt)
        if sol.status == "infeasible":
            log.warning("positioning subproblem infeasible at t=%d; keeping anchor", t)
            break

        x_new = sol.x
        l_new = l_state if frozen else polish_l(x_new, regions, big_m, eps)
        alloc_new = allocate(x_new, scenario)
        q_new = _q_u_mbps(x_new, l_new, alloc_new, lam, scenario)
        if q_new < q_prev:
            break  # rounding-level regression; keep the current point
        iterations = t
        records.append(InnerRecord(t=t, q_u_mbps=q_new,
                                   step_m=float(np.linalg.norm(x_new - x)),
                                   rho_m=rho))
        gain = q_new - q_prev
        x, l_state, alloc, q_prev = x_new, l_new, alloc_new, q_new
        rho *= cfg.rho_decay
        if gain < cfg.inner_tol_mbps:
            break

    return InnerResult(x=x, l=l_state, alloc=alloc, q_u_mbps=q_prev,
                       records=records, iterations=iterations)


_GAP_STEP_CAP = 0.9


def update_multipliers(lam, mu, l_bar, q_u, q_l, q_u_prev=None, *,
                       decrease_slack: float = 1e-9):
    """Subgradient step on the multipliers with the adaptive step size.

    The nominal step closes the estimated gap: it raises the total defect
    price by mu * (q_u - q_l).  With a shaded iterate the target q_l is a
    crude zero, and because the inner pass maximizes only locally, a full
    step can price the defects beyond the whole objective and push the next
    bound negative.  The step is therefore capped so the price increase
    never exceeds 90% of the current bound; the next pass then starts at a
    provably nonnegative value and the duality record q_u >= q_l survives
    local wedging.

    With a fully binary l the defect subgradient vanishes; the multipliers
    are left alone and the caller's gap check decides termination.
    """
    lam = np.asarray(lam, dtype=float)
    g = _defects(l_bar)
    denom = float(np.sum(g ** 2))
    if q_u_prev is not None and q_u > q_u_prev - decrease_slack:
        mu = mu / 2.0
    if denom == 0.0:
        return lam.copy(), mu
    raise_cap = _GAP_STEP_CAP * max(q_u, 0.0)
    gamma = min(mu * (q_u - q_l), raise_cap) / denom
    return np.maximum(0.0, lam + gamma * g), mu


def evaluate_q_l(x, scenario, regions, eps: float | None = None) -> float:
    """Value of the original problem at x, in bit/s: zero if any shadow
    region contains x, otherwise the min capacity with re-optimized powers
    under the LoS model.

    The driver passes the positioning clearance for ``eps`` so that a point
    counts as feasible for the gap test exactly when its defect pricing is
    zero; the default is the plain conservative membership band.
    """
    eps = scenario.bounds.geo_eps if eps is None else eps
    if geometry.is_blocked(x, regions, eps):
        return 0.0
    alloc = allocate(x, scenario)
    return min_capacity_los(x, alloc.p_bs, alloc.p_ues, scenario)


def initial_l(regions) -> list:
    return [np.full(r.n_planes, (r.n_planes - 1.0) / r.n_planes)
            for r in regions]


def prepare_regions(scenario):
    """Shadow polyhedra for all links, redundancies pruned, plus big-M."""
    regions = geometry.build_regions(scenario.bs, scenario.ues,
                                     scenario.buildings)
    regions = geometry.prune_redundant(regions, scenario.bounds)
    return regions, geometry.big_m_constant(regions, scenario.bounds)


def _fallback(scenario, regions, big_m, cfg) -> InnerResult:
    bounds = scenario.bounds
    eps = clearance_eps(bounds)
    center = (0.5 * bounds.x_m, 0.5 * bounds.y_m)
    try:
        alt = geometry.lowest_clear_altitude(center, regions, bounds,
                                             step=cfg.fallback_step_m,
                                             eps=eps)
    except geometry.GeometryError as exc:
        raise FallbackInfeasibleError(str(exc)) from exc
    x0 = np.array([center[0], center[1], alt])
    frozen = [np.where(r.margins(x0) >= eps, 0.0, 1.0) for r in regions]
    # the recovery altitude may sit above the nominal ceiling (the shadowed
    # volume is unbounded above the box); widen the pass's box to keep the
    # anchor feasible, the descent only moves down from there
    fb_bounds = bounds
    if alt > bounds.h_max_m:
        fb_bounds = geometry.AreaBounds(bounds.x_m, bounds.y_m,
                                        bounds.h_min_m, alt + 1.0)
    return inner_loop(x0, None, np.zeros(len(regions)), regions, big_m,
                      scenario, cfg, frozen_l=frozen, bounds=fb_bounds)


def solve(scenario, config: SolverConfig | None = None
          ) -> tuple[Solution, IterationTrace]:
    """Run the full two-loop optimization on one scenario."""
    cfg = config or SolverConfig()
    bounds = scenario.bounds
    regions, big_m = prepare_regions(scenario)

    lam = np.full(len(regions), cfg.lambda0)
    mu = cfg.mu0
    x = np.array([0.5 * bounds.x_m, 0.5 * bounds.y_m, bounds.h_max_m])
    l_state = initial_l(regions)
    trace = IterationTrace()
    q_u_prev = None
    converged = False
    inner_total = 0
    inner = None

    clear_eps = clearance_eps(bounds) - _CLEAR_SLACK_M
    for T in range(1, cfg.max_outer + 1):
        inner = inner_loop(x, l_state, lam, regions, big_m, scenario, cfg)
        inner_total += inner.iterations
        q_u = inner.q_u_mbps
        feasible = not geometry.is_blocked(inner.x, regions, clear_eps)
        q_l = RATE_SCALE * evaluate_q_l(inner.x, scenario, regions,
                                        eps=clear_eps)
        trace.outer.append(OuterRecord(
            T=T, q_u_mbps=q_u, q_l_mbps=q_l, gap_mbps=q_u - q_l, mu=mu,
            lambdas=lam.copy(), x=inner.x.copy(), inner=inner.records))
        # convergence means the gap is closed by a deployable solution: the
        # bound can also sink to a zero q_L when the relay is wedged between
        # shadows and the multiplier steps quench, which is a failure
        if q_u - q_l < cfg.outer_tol_mbps and feasible:
            converged = True
            break
        lam, mu = update_multipliers(lam, mu, inner.l, q_u, q_l, q_u_prev,
                                     decrease_slack=cfg.decrease_slack_mbps)
        q_u_prev = q_u
        x, l_state = inner.x, inner.l

    fallback_used = False
    if not converged:
        log.info("gap not closed in %d outer iterations; center-column restart",
                 cfg.max_outer)
        inner = _fallback(scenario, regions, big_m, cfg)
        inner_total += inner.iterations
        fallback_used = True

    x_star, alloc = inner.x, inner.alloc
    solution = Solution(
        position=x_star,
        p_bs=alloc.p_bs,
        p_ues=alloc.p_ues,
        min_capacity_bps=min_capacity_actual(x_star, alloc.p_bs, alloc.p_ues,
                                             scenario),
        feasible=not geometry.is_blocked(x_star, regions, bounds.geo_eps),
        converged=converged,
        fallback_used=fallback_used,
        outer_iters=len(trace.outer),
        inner_iters_total=inner_total,
    )
    return solution, trace
