"""Small dense cone programs with linear and second-order cone constraints.

Solves
    minimize    c @ u
    subject to  G @ u + s = h,   s in K = R+^lp x Q^d1 x ... x Q^dp,

where Q^d = {(t, v) in R x R^(d-1) : ||v|| <= t}, together with the dual

    maximize   -h @ z
    subject to  G.T @ z + c = 0,   z in K,

by an infeasible-start primal-dual predictor-corrector interior-point method
with Nesterov-Todd scaling.  Problems in this package are tiny (tens of
variables, a few hundred rows), so the Newton system is formed densely and
refactored every iteration, and the per-cone scaling blocks are explicit
small matrices.  The method is deterministic: identical inputs give
bit-identical iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConeDims:
    """Sizes of the cone blocks, in vector order: orthant first, then SOCs."""

    lp: int
    soc: tuple[int, ...] = ()

    @property
    def total(self) -> int:
        return self.lp + sum(self.soc)

    @property
    def order(self) -> int:
        """Barrier parameter count: one per LP entry, one per cone."""
        return self.lp + len(self.soc)

    def soc_slices(self):
        start = self.lp
        for d in self.soc:
            yield slice(start, start + d)
            start += d


@dataclass
class ConeLPResult:
    status: str  # "optimal" or "max_iter"
    u: np.ndarray
    s: np.ndarray
    z: np.ndarray
    iterations: int
    pres: float
    dres: float
    gap: float
    relgap: float
    pcost: float
    dcost: float


def cone_identity(dims: ConeDims) -> np.ndarray:
    e = np.zeros(dims.total)
    e[:dims.lp] = 1.0
    for sl in dims.soc_slices():
        e[sl.start] = 1.0
    return e


def min_margin(v: np.ndarray, dims: ConeDims) -> float:
    """Distance-to-boundary proxy: min over LP entries and SOC residuals."""
    parts = []
    if dims.lp:
        parts.append(float(np.min(v[:dims.lp])))
    for sl in dims.soc_slices():
        blk = v[sl]
        parts.append(float(blk[0] - np.linalg.norm(blk[1:])))
    return min(parts) if parts else np.inf


def _soc_max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest t >= 0 with x + t*dx in the SOC; x strictly interior."""
    a = dx[0] ** 2 - dx[1:] @ dx[1:]
    b = 2.0 * (x[0] * dx[0] - x[1:] @ dx[1:])
    c = x[0] ** 2 - x[1:] @ x[1:]
    lin = np.inf if dx[0] >= 0 else -x[0] / dx[0]
    if abs(a) < 1e-300:
        quad = np.inf if b >= 0 else -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc <= 0:
            quad = np.inf if a > 0 else 0.0
        else:
            # cancellation-free root pair (Citardauq for the small root)
            q = -0.5 * (b + np.copysign(np.sqrt(disc), b if b != 0 else 1.0))
            roots = []
            if abs(a) > 0:
                roots.append(q / a)
            if abs(q) > 0:
                roots.append(c / q)
            pos = [r for r in roots if r > 0]
            quad = min(pos) if pos else np.inf
    return min(lin, quad)


def max_step(v: np.ndarray, dv: np.ndarray, dims: ConeDims) -> float:
    """Largest t >= 0 keeping v + t*dv inside the cone."""
    t = np.inf
    if dims.lp:
        neg = dv[:dims.lp] < 0
        if np.any(neg):
            t = float(np.min(-v[:dims.lp][neg] / dv[:dims.lp][neg]))
    for sl in dims.soc_slices():
        t = min(t, _soc_max_step(v[sl], dv[sl]))
    return t


@dataclass
class _Scaling:
    """Nesterov-Todd scaling point: W z = W^-1 s = lam (W symmetric)."""

    dims: ConeDims
    w_lp: np.ndarray = field(default=None)
    soc_W: list = field(default_factory=list)
    soc_Winv: list = field(default_factory=list)
    lam: np.ndarray = field(default=None)


def _nt_scaling(s: np.ndarray, z: np.ndarray, dims: ConeDims) -> _Scaling:
    sc = _Scaling(dims=dims)
    lam = np.empty(dims.total)
    if dims.lp:
        sc.w_lp = np.sqrt(s[:dims.lp] / z[:dims.lp])
        lam[:dims.lp] = np.sqrt(s[:dims.lp] * z[:dims.lp])
    for sl in dims.soc_slices():
        sb, zb = s[sl], z[sl]
        sres = np.sqrt(sb[0] ** 2 - sb[1:] @ sb[1:])
        zres = np.sqrt(zb[0] ** 2 - zb[1:] @ zb[1:])
        su, zu = sb / sres, zb / zres
        gamma = np.sqrt((1.0 + su @ zu) / 2.0)
        w0 = (su[0] + zu[0]) / (2.0 * gamma)
        w1 = (su[1:] - zu[1:]) / (2.0 * gamma)
        d = len(sb)
        W = np.empty((d, d))
        W[0, 0] = w0
        W[0, 1:] = w1
        W[1:, 0] = w1
        W[1:, 1:] = np.eye(d - 1) + np.outer(w1, w1) / (1.0 + w0)
        W *= np.sqrt(sres / zres)
        sc.soc_W.append(W)
        sc.soc_Winv.append(np.linalg.inv(W))
        lam[sl] = W @ zb
    sc.lam = lam
    return sc


def _apply_W(sc: _Scaling, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    if sc.dims.lp:
        out[:sc.dims.lp] = sc.w_lp * v[:sc.dims.lp]
    for W, sl in zip(sc.soc_W, sc.dims.soc_slices()):
        out[sl] = W @ v[sl]
    return out


def _apply_Winv(sc: _Scaling, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    if sc.dims.lp:
        out[:sc.dims.lp] = v[:sc.dims.lp] / sc.w_lp
    for Wi, sl in zip(sc.soc_Winv, sc.dims.soc_slices()):
        out[sl] = Wi @ v[sl]
    return out


def _apply_Winv2_mat(sc: _Scaling, V: np.ndarray) -> np.ndarray:
    """W^-2 @ V for a matrix V with cone-ordered rows."""
    out = np.empty_like(V)
    if sc.dims.lp:
        out[:sc.dims.lp] = V[:sc.dims.lp] / (sc.w_lp ** 2)[:, None]
    for Wi, sl in zip(sc.soc_Winv, sc.dims.soc_slices()):
        out[sl] = Wi @ (Wi @ V[sl])
    return out


def _jordan_prod(u: np.ndarray, v: np.ndarray, dims: ConeDims) -> np.ndarray:
    out = np.empty(dims.total)
    if dims.lp:
        out[:dims.lp] = u[:dims.lp] * v[:dims.lp]
    for sl in dims.soc_slices():
        ub, vb = u[sl], v[sl]
        out[sl.start] = ub @ vb
        out[sl.start + 1:sl.stop] = ub[0] * vb[1:] + vb[0] * ub[1:]
    return out


def _jordan_solve(lam: np.ndarray, d: np.ndarray, dims: ConeDims) -> np.ndarray:
    """Solve lam o q = d for q (arrow-matrix inverse per cone)."""
    out = np.empty(dims.total)
    if dims.lp:
        out[:dims.lp] = d[:dims.lp] / lam[:dims.lp]
    for sl in dims.soc_slices():
        lb, db = lam[sl], d[sl]
        det = lb[0] ** 2 - lb[1:] @ lb[1:]
        q0 = (lb[0] * db[0] - lb[1:] @ db[1:]) / det
        out[sl.start] = q0
        out[sl.start + 1:sl.stop] = (db[1:] - q0 * lb[1:]) / lb[0]
    return out


def _initial_point(c, G, h, dims):
    e = cone_identity(dims)
    u = np.linalg.lstsq(G, h, rcond=None)[0]
    s = h - G @ u
    m = min_margin(s, dims)
    if m <= 0:
        s = s + (1.0 - m) * e
    z = np.linalg.lstsq(G.T, -c, rcond=None)[0]
    m = min_margin(z, dims)
    if m <= 0:
        z = z + (1.0 - m) * e
    return u, s, z


def solve_cone_lp(c, G, h, dims: ConeDims, *, max_iter: int = 100,
                  feastol: float = 1e-9, gaptol: float = 1e-9,
                  step_frac: float = 0.99) -> ConeLPResult:
    """Mehrotra-style predictor-corrector for the cone LP above."""
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    m, n = G.shape
    if dims.total != m:
        raise ValueError("cone dimensions do not match G")

    e = cone_identity(dims)
    nu = dims.order
    u, s, z = _initial_point(c, G, h, dims)
    hnorm = max(1.0, float(np.linalg.norm(h)))
    cnorm = max(1.0, float(np.linalg.norm(c)))

    status = "max_iter"
    iters = 0
    pres = dres = gap = relgap = np.inf
    pcost = dcost = np.nan

    for it in range(max_iter):
        iters = it
        r_p = G @ u + s - h
        r_d = G.T @ z + c
        gap = float(s @ z)
        pcost = float(c @ u)
        dcost = float(-h @ z)
        pres = float(np.linalg.norm(r_p)) / hnorm
        dres = float(np.linalg.norm(r_d)) / cnorm
        relgap = gap / max(1.0, abs(pcost), abs(dcost))
        if pres <= feastol and dres <= feastol and (gap <= gaptol
                                                    or relgap <= gaptol):
            status = "optimal"
            break
        if min(min_margin(s, dims), min_margin(z, dims)) <= 0:
            break  # numerically on the boundary; keep the last iterate

        sc = _nt_scaling(s, z, dims)
        mu = gap / nu

        GW = _apply_Winv2_mat(sc, G)
        M = G.T @ GW
        jitter = 0.0
        for _ in range(4):
            try:
                Mf = M + jitter * np.eye(n)
                np.linalg.cholesky(Mf)
                break
            except np.linalg.LinAlgError:
                jitter = max(jitter * 100.0, 1e-12 * (1.0 + np.trace(M) / n))
        else:
            break

        def solve_kkt(bx, bz, bs):
            # Gramian elimination of (du, dz, ds), one refinement pass
            def once(bx, bz, bs):
                dtil = _jordan_solve(sc.lam, bs, dims)
                rhs = bx + GW.T @ bz - G.T @ _apply_Winv(sc, dtil)
                du = np.linalg.solve(Mf, rhs)
                dz = _apply_Winv2_mat(sc, (G @ du - bz)[:, None])[:, 0] \
                    + _apply_Winv(sc, dtil)
                ds = bz - G @ du
                return du, dz, ds

            du, dz, ds = once(bx, bz, bs)
            # residuals of the Newton equations
            ex = bx - G.T @ dz
            ez = bz - (G @ du + ds)
            es = bs - _jordan_prod(sc.lam, _apply_W(sc, dz)
                                   + _apply_Winv(sc, ds), dims)
            cu, cz, cs = once(ex, ez, es)
            return du + cu, dz + cz, ds + cs

        # predictor
        try:
            bs_aff = -_jordan_prod(sc.lam, sc.lam, dims)
            du_a, dz_a, ds_a = solve_kkt(-r_d, -r_p, bs_aff)
            alpha_a = min(1.0, max_step(s, ds_a, dims), max_step(z, dz_a, dims))
            mu_aff = float((s + alpha_a * ds_a) @ (z + alpha_a * dz_a)) / nu
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

            # corrector
            bs = (bs_aff + sigma * mu * e
                  - _jordan_prod(_apply_Winv(sc, ds_a), _apply_W(sc, dz_a),
                                 dims))
            du, dz, ds = solve_kkt(-r_d, -r_p, bs)
        except np.linalg.LinAlgError:
            break
        if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dz))
                and np.all(np.isfinite(ds))):
            break
        alpha = step_frac * min(max_step(s, ds, dims), max_step(z, dz, dims))
        alpha = min(1.0, alpha)
        # boundary distances are roots of near-degenerate quadratics; verify
        # the step stays strictly interior and back off if rounding says no
        while alpha >= 1e-13 and not (min_margin(s + alpha * ds, dims) > 0
                                      and min_margin(z + alpha * dz, dims) > 0):
            alpha *= 0.5
        if alpha < 1e-13:
            break
        u = u + alpha * du
        s = s + alpha * ds
        z = z + alpha * dz

    return ConeLPResult(status=status, u=u, s=s, z=z, iterations=iters,
                        pres=pres, dres=dres, gap=gap, relgap=relgap,
                        pcost=pcost, dcost=dcost)
