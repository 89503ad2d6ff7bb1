import numpy as np
import pytest

from uavrelay.socp import (
    ConeDims,
    _nt_scaling,
    cone_identity,
    max_step,
    min_margin,
    solve_cone_lp,
)

cp = pytest.importorskip("cvxpy")


def random_interior(dims, rng):
    v = rng.standard_normal(dims.total)
    if dims.lp:
        v[:dims.lp] = rng.uniform(0.2, 3.0, dims.lp)
    for sl in dims.soc_slices():
        v[sl.start] = np.linalg.norm(v[sl.start + 1:sl.stop]) + rng.uniform(0.2, 2.0)
    return v


class TestScaling:
    def test_nt_identities(self):
        rng = np.random.default_rng(1)
        dims = ConeDims(lp=5, soc=(3, 4, 6))
        for _ in range(20):
            s = random_interior(dims, rng)
            z = random_interior(dims, rng)
            sc = _nt_scaling(s, z, dims)
            for W, Wi, sl in zip(sc.soc_W, sc.soc_Winv, dims.soc_slices()):
                np.testing.assert_allclose(W, W.T, atol=1e-12)
                np.testing.assert_allclose(W @ Wi, np.eye(sl.stop - sl.start),
                                           atol=1e-9)
                np.testing.assert_allclose(W @ z[sl], Wi @ s[sl], rtol=1e-9)
            np.testing.assert_allclose(sc.lam[:dims.lp],
                                       np.sqrt(s[:dims.lp] * z[:dims.lp]))

    def test_max_step_lands_on_boundary(self):
        rng = np.random.default_rng(2)
        dims = ConeDims(lp=4, soc=(5,))
        for _ in range(50):
            v = random_interior(dims, rng)
            dv = rng.standard_normal(dims.total)
            t = max_step(v, dv, dims)
            if np.isfinite(t):
                assert min_margin(v + t * dv, dims) == pytest.approx(0.0, abs=1e-8)
                assert min_margin(v + 0.99 * t * dv, dims) > 0


class TestAnalytic:
    def test_box_lp(self):
        # min -x1 - 2 x2 over the unit box
        c = np.array([-1.0, -2.0])
        G = np.vstack([np.eye(2), -np.eye(2)])
        h = np.array([1.0, 1.0, 0.0, 0.0])
        res = solve_cone_lp(c, G, h, ConeDims(lp=4))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.u, [1.0, 1.0], atol=1e-7)

    def test_norm_ball(self):
        # min c.x s.t. ||x|| <= 1  ->  x = -c/||c||
        c = np.array([3.0, -4.0, 12.0])
        G = np.vstack([np.zeros(3), -np.eye(3)])
        h = np.array([1.0, 0.0, 0.0, 0.0])
        res = solve_cone_lp(c, G, h, ConeDims(lp=0, soc=(4,)))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.u, -c / np.linalg.norm(c), atol=1e-7)

    def test_infeasible_start_dual_feasibility(self):
        # equality-free LP whose initial least-squares point is far away
        c = np.array([1.0, 1.0])
        G = np.array([[-1.0, 0.0], [0.0, -1.0], [-1.0, -1.0]])
        h = np.array([-2.0, -3.0, -4.0])  # x >= 2, y >= 3, x + y >= 4
        res = solve_cone_lp(c, G, h, ConeDims(lp=3))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.u, [2.0, 3.0], atol=1e-7)


class TestAgainstCvxpy:
    def _random_problem(self, rng, n, n_lp, socs):
        dims = ConeDims(lp=2 * n + n_lp, soc=tuple(socs))
        u0 = rng.uniform(-1.0, 1.0, n)
        rows = [np.eye(n), -np.eye(n), rng.standard_normal((n_lp, n))]
        G = np.vstack(rows + [rng.standard_normal((d, n)) for d in socs])
        s0 = random_interior(dims, rng)
        h = G @ u0 + s0
        h[:n] = 2.0
        h[n:2 * n] = 2.0  # box |u| <= 2 keeps it bounded
        c = rng.standard_normal(n)
        return c, G, h, dims

    def _cvxpy_value(self, c, G, h, dims):
        n = G.shape[1]
        x = cp.Variable(n)
        cons = []
        if dims.lp:
            cons.append(G[:dims.lp] @ x <= h[:dims.lp])
        for sl in dims.soc_slices():
            t = h[sl.start] - G[sl.start] @ x
            v = h[sl.start + 1:sl.stop] - G[sl.start + 1:sl.stop] @ x
            cons.append(cp.SOC(t, v))
        prob = cp.Problem(cp.Minimize(c @ x), cons)
        prob.solve(solver=cp.CLARABEL)
        return prob.value

    @pytest.mark.parametrize("seed", range(8))
    def test_random_mixed_cones(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(3, 9))
        c, G, h, dims = self._random_problem(rng, n, n_lp=int(rng.integers(0, 6)),
                                             socs=[int(d) for d in
                                                   rng.integers(3, 6, 2)])
        res = solve_cone_lp(c, G, h, dims)
        assert res.status == "optimal"
        ref = self._cvxpy_value(c, G, h, dims)
        assert res.pcost == pytest.approx(ref, rel=1e-6, abs=1e-7)
        # primal point respects the cones
        assert min_margin(h - G @ res.u, dims) >= -1e-8

    def test_deterministic_bit_for_bit(self):
        rng = np.random.default_rng(7)
        c, G, h, dims = self._random_problem(rng, 5, 4, [4, 3])
        r1 = solve_cone_lp(c, G, h, dims)
        r2 = solve_cone_lp(c, G, h, dims)
        assert np.array_equal(r1.u, r2.u)
        assert np.array_equal(r1.z, r2.z)
        assert r1.iterations == r2.iterations


def test_identity_vector():
    dims = ConeDims(lp=2, soc=(3,))
    np.testing.assert_array_equal(cone_identity(dims), [1, 1, 1, 0, 0])
