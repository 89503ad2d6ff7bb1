"""Convex trust-region positioning subproblem.

For fixed transmit powers each rate constraint R <= W log2(1 + zeta / d^a)
is non-convex in the relay position.  The right-hand side is convex in the
link distance d, so its first-order Taylor expansion at the current distance,

    R_lb(x) = A - B * (||x - p|| - d_t),    A, B > 0,

under-estimates it everywhere; replacing the rates with these bounds, the
binary relaxation penalty with its tangent, and adding a trust-region ball
around the anchor yields a second-order cone program over (x, R, l).  The
norm terms enter directly as cone blocks (no epigraph variables needed: each
constraint already has the form affine >= ||affine||).

Rates in this module are expressed in Mbit/s; that keeps the cone data well
conditioned next to meters-scale geometry and matches the convergence
thresholds of the outer solver.  ``fixed_alt`` pins the altitude and solves
in the horizontal plane only (used by the geography-blind baseline).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import AreaBounds, BlockedRegion
from .socp import ConeDims, solve_cone_lp

RATE_SCALE = 1e-6  # bit/s -> Mbit/s

#: The conservative membership test counts margins up to geo_eps as shaded,
#: so the positioning constraints demand twice that clearance; otherwise the
#: optimizer can park a solution exactly on the ambiguous band and the
#: integrality defect never reaches zero.
CLEARANCE_FACTOR = 2.0

_LN2 = np.log(2.0)


def clearance_eps(bounds: AreaBounds) -> float:
    return CLEARANCE_FACTOR * bounds.geo_eps


@dataclass
class SubproblemLinearization:
    """Tangent data for the rate bounds at one anchor position (Mbit/s)."""

    anchor: np.ndarray
    rho_m: float
    d_ue: np.ndarray
    a_ue: np.ndarray
    b_ue: np.ndarray
    zeta_ue: np.ndarray
    d_bs: float
    a_bs: float
    b_bs: float
    zeta_bs: float

    @property
    def num_ues(self) -> int:
        return len(self.d_ue)

    def rate_bounds_at(self, x, ue_positions, bs_position) -> tuple[np.ndarray, float]:
        """Evaluate the per-user and backhaul lower bounds at a position."""
        x = np.asarray(x, dtype=float)
        d_ue = np.linalg.norm(x - ue_positions, axis=1)
        d_bs = float(np.linalg.norm(x - bs_position))
        return (self.a_ue - self.b_ue * (d_ue - self.d_ue),
                self.a_bs - self.b_bs * (d_bs - self.d_bs))


def _tangent(dist, zeta, bandwidth_hz, alpha):
    """Intercept and slope of the rate bound in the distance variable."""
    a = RATE_SCALE * bandwidth_hz * np.log1p(zeta / dist ** alpha) / _LN2
    b = (RATE_SCALE * bandwidth_hz * zeta * alpha
         / (dist * (dist ** alpha + zeta) * _LN2))
    return a, b


def linearize(x_t, alloc, scenario, rho_m: float) -> SubproblemLinearization:
    """Taylor data of the rate constraints at anchor ``x_t`` (LoS model)."""
    ch = scenario.channel
    x_t = np.asarray(x_t, dtype=float)
    d_ue = np.linalg.norm(x_t - scenario.ues, axis=1)
    d_bs = float(np.linalg.norm(x_t - scenario.bs))
    if d_bs <= 0 or np.any(d_ue <= 0):
        raise ValueError("anchor coincides with a link endpoint")
    alpha = ch.los_exponent
    zeta_ue = alloc.p_ues * ch.los_gain_1m / (ch.noise_psd_w * ch.ue_bandwidth_hz)
    zeta_bs = alloc.p_bs * ch.los_gain_1m / (ch.noise_psd_w * ch.bs_bandwidth_hz)
    a_ue, b_ue = _tangent(d_ue, zeta_ue, ch.ue_bandwidth_hz, alpha)
    a_bs, b_bs = _tangent(d_bs, zeta_bs, ch.bs_bandwidth_hz, alpha)
    return SubproblemLinearization(
        anchor=x_t, rho_m=rho_m, d_ue=d_ue, a_ue=a_ue, b_ue=b_ue,
        zeta_ue=zeta_ue, d_bs=d_bs, a_bs=float(a_bs), b_bs=float(b_bs),
        zeta_bs=float(zeta_bs))


def penalty_upper_bound(l, l_anchor):
    """Tangent majorant of l(1-l): exact at the anchor, above elsewhere."""
    l = np.asarray(l, dtype=float)
    l_anchor = np.asarray(l_anchor, dtype=float)
    return l - 2.0 * l_anchor * l + l_anchor ** 2


@dataclass
class ConvexSolution:
    x: np.ndarray
    l: list  # per-region arrays, aligned with the regions argument
    r_mbps: float
    status: str  # optimal | infeasible | max-iter
    objective_mbps: float
    kkt: dict = field(default_factory=dict)


def _equilibrate(c, G, h, dims, passes: int = 3):
    m, n = G.shape
    row = np.ones(m)
    col = np.ones(n)
    for _ in range(passes):
        Gs = np.abs(G) * row[:, None] * col[None, :]
        scale = np.ones(m)
        if dims.lp:
            mx = Gs[:dims.lp].max(axis=1)
            scale[:dims.lp] = np.where(mx > 0, 1.0 / np.sqrt(mx), 1.0)
        for sl in dims.soc_slices():
            mx = Gs[sl].max()
            if mx > 0:
                scale[sl] = 1.0 / np.sqrt(mx)
        row *= np.clip(scale, 1e-6, 1e6)
        Gs = np.abs(G) * row[:, None] * col[None, :]
        mx = Gs.max(axis=0)
        col *= np.clip(np.where(mx > 0, 1.0 / np.sqrt(mx), 1.0), 1e-6, 1e6)
    return c * col, G * row[:, None] * col[None, :], h * row, row, col


def solve_subproblem(lin: SubproblemLinearization, regions: list[BlockedRegion],
                     l_anchor: list, multipliers, bounds: AreaBounds,
                     big_m: float, scenario, *, fixed_alt: float | None = None,
                     frozen_l: list | None = None) -> ConvexSolution:
    """Maximize R minus the linearized relaxation penalty over the trust ball.

    ``regions`` lists only the shadow polyhedra that are actually reachable
    within the ball (the caller prunes the rest; their relaxation variables
    are separable and handled outside).  With ``frozen_l`` the binaries are
    fixed: planes with l = 0 become plain linear constraints and no
    relaxation variables exist.
    """
    eps = clearance_eps(bounds)
    pos = 2 if fixed_alt is not None else 3
    lam = np.asarray(multipliers, dtype=float)
    frozen = frozen_l is not None
    x_t = lin.anchor
    k = lin.num_ues

    sizes = [] if frozen else [r.n_planes for r in regions]
    n_l = sum(sizes)
    l_off = []
    off = pos + 1
    for s_i in sizes:
        l_off.append(off)
        off += s_i
    n = pos + 1 + n_l
    R_IDX = pos

    def pos_part(vec3):
        return vec3[:pos]

    def const_z(a_row):
        # altitude contribution moves to the right-hand side in 2-D mode
        return a_row[2] * fixed_alt if fixed_alt is not None else 0.0

    rows_G, rows_h = [], []

    def add_row(coeffs: dict, rhs: float):
        g = np.zeros(n)
        for idx, val in coeffs.items():
            g[idx] = val
        rows_G.append(g)
        rows_h.append(rhs)

    # shadow-plane rows: a.x - b + C*l >= eps
    if frozen:
        for reg, l_i in zip(regions, frozen_l):
            for j in range(reg.n_planes):
                if l_i[j] == 0:
                    a = reg.A[j]
                    co = {d: -a[d] for d in range(pos)}
                    add_row(co, -(reg.b[j] + eps) + const_z(a))
    else:
        for i, reg in enumerate(regions):
            for j in range(reg.n_planes):
                a = reg.A[j]
                co = {d: -a[d] for d in range(pos)}
                co[l_off[i] + j] = -big_m
                add_row(co, -(reg.b[j] + eps) + const_z(a))
        for i, reg in enumerate(regions):
            add_row({l_off[i] + j: 1.0 for j in range(reg.n_planes)},
                    reg.n_planes - 1.0)
        for i, reg in enumerate(regions):
            for j in range(reg.n_planes):
                add_row({l_off[i] + j: 1.0}, 1.0)
                add_row({l_off[i] + j: -1.0}, 0.0)

    # flight box
    add_row({0: 1.0}, bounds.x_m)
    add_row({0: -1.0}, 0.0)
    add_row({1: 1.0}, bounds.y_m)
    add_row({1: -1.0}, 0.0)
    if pos == 3:
        add_row({2: 1.0}, bounds.h_max_m)
        add_row({2: -1.0}, -bounds.h_min_m)

    n_lp = len(rows_G)

    # second-order cone blocks: rate bounds and the trust region
    soc_dims = []

    def add_cone(r_coef: float, slope: float, endpoint, head_rhs: float):
        add_row({R_IDX: r_coef}, head_rhs)
        for d in range(pos):
            add_row({d: slope}, slope * endpoint[d])
        if fixed_alt is not None:
            add_row({}, slope * (endpoint[2] - fixed_alt))
        soc_dims.append(1 + pos + (1 if fixed_alt is not None else 0))

    for kk in range(k):
        add_cone(1.0, lin.b_ue[kk], scenario.ues[kk],
                 lin.a_ue[kk] + lin.b_ue[kk] * lin.d_ue[kk])
    add_cone(float(k), lin.b_bs, scenario.bs,
             lin.a_bs + lin.b_bs * lin.d_bs)
    # trust ball ||x - x_t|| <= rho
    add_row({}, lin.rho_m)
    for d in range(pos):
        add_row({d: 1.0}, x_t[d])
    soc_dims.append(1 + pos)

    G = np.array(rows_G)
    h = np.array(rows_h)
    dims = ConeDims(lp=n_lp, soc=tuple(soc_dims))

    c = np.zeros(n)
    c[R_IDX] = -1.0
    if not frozen:
        for i, reg in enumerate(regions):
            c[l_off[i]:l_off[i] + reg.n_planes] = lam[i] * (1.0 - 2.0 * l_anchor[i])

    # anchor in variable space, for feasibility checks and trust clamping
    u_anchor = np.zeros(n)
    u_anchor[:pos] = pos_part(x_t)
    anchor_rates, anchor_bs = lin.rate_bounds_at(x_t, scenario.ues, scenario.bs)
    u_anchor[R_IDX] = min(anchor_rates.min(), anchor_bs / k)
    if not frozen:
        for i, l_i in enumerate(l_anchor):
            u_anchor[l_off[i]:l_off[i] + len(l_i)] = l_i

    slack = h - G @ u_anchor
    lp_ok = n_lp == 0 or float(np.min(slack[:n_lp])) >= -1e-7 * max(1.0, big_m)
    if not lp_ok:
        return ConvexSolution(
            x=x_t.copy(), l=[np.array(li, dtype=float) for li in (l_anchor or [])],
            r_mbps=float(u_anchor[R_IDX]), status="infeasible",
            objective_mbps=-np.inf)

    cs, Gs, hs, _, col = _equilibrate(c, G, h, dims)
    # large multipliers make the objective wildly anisotropic; a global
    # rescale keeps the interior-point arithmetic balanced (same argmax)
    c_norm = max(1.0, float(np.max(np.abs(cs))))
    res = solve_cone_lp(cs / c_norm, Gs, hs, dims, feastol=1e-9, gaptol=1e-9)
    u = res.u * col

    # trust-region clamp: blend toward the (feasible) anchor if the solver
    # overshot the ball by a rounding margin
    dx = u[:pos] - pos_part(x_t)
    nrm = float(np.linalg.norm(dx))
    if nrm > lin.rho_m > 0:
        theta = lin.rho_m / nrm
        u = theta * u + (1.0 - theta) * u_anchor

    if fixed_alt is not None:
        x = np.array([u[0], u[1], fixed_alt])
    else:
        x = u[:3].copy()

    if frozen:
        l_out = [np.array(li, dtype=float) for li in frozen_l]
    else:
        l_out = [np.clip(u[l_off[i]:l_off[i] + reg.n_planes], 0.0, 1.0)
                 for i, reg in enumerate(regions)]

    rates, bs_rate = lin.rate_bounds_at(x, scenario.ues, scenario.bs)
    r_mbps = float(min(rates.min(), bs_rate / k))
    obj = r_mbps
    if not frozen:
        for i, (l_i, l_a) in enumerate(zip(l_out, l_anchor)):
            obj -= lam[i] * float(np.sum(penalty_upper_bound(l_i, l_a)))

    status = "optimal" if res.status == "optimal" else "max-iter"
    return ConvexSolution(
        x=x, l=l_out, r_mbps=r_mbps, status=status, objective_mbps=obj,
        kkt={"pres": res.pres, "dres": res.dres, "relgap": res.relgap,
             "iterations": res.iterations})
