import numpy as np
import pytest

from uavrelay.channel import ChannelParams, PowerParams, min_capacity_los
from uavrelay.geometry import AreaBounds
from uavrelay.power import allocate, allocate_many, link_etas
from uavrelay.scenario import Scenario


def make_scenario(ues, bs_total_w=1.0, uav_total_w=1.0):
    ues = np.atleast_2d(np.asarray(ues, dtype=float))
    return Scenario(
        bounds=AreaBounds(x_m=500.0, y_m=500.0, h_min_m=50.0),
        bs=np.array([0.0, 0.0, 25.0]),
        ues=ues,
        buildings=[],
        channel=ChannelParams(bs_bandwidth_hz=len(ues) * 5e6),
        power=PowerParams(bs_total_w=bs_total_w, uav_total_w=uav_total_w),
        seed=0,
    )


def min_capacity(x, alloc, sc):
    return min_capacity_los(x, alloc.p_bs, alloc.p_ues, sc)


def per_ue_rates(x, alloc, sc):
    ch = sc.channel
    d = np.linalg.norm(np.asarray(x) - sc.ues, axis=1)
    snr = alloc.p_ues * ch.los_gain_1m / (
        ch.noise_psd_w * ch.ue_bandwidth_hz * d ** ch.los_exponent)
    return ch.ue_bandwidth_hz * np.log2(1 + snr)


def backhaul_rate(x, alloc, sc):
    ch = sc.channel
    d = np.linalg.norm(np.asarray(x) - sc.bs)
    snr = alloc.p_bs * ch.los_gain_1m / (
        ch.noise_psd_w * ch.bs_bandwidth_hz * d ** ch.los_exponent)
    return ch.bs_bandwidth_hz * np.log2(1 + snr)


class TestBranches:
    def test_equidistant_users_split_evenly(self):
        # users on a circle below the relay, generous backhaul: the relay
        # budget binds and splits evenly by symmetry
        ues = [[250 + 60 * np.cos(a), 250 + 60 * np.sin(a), 0.0]
               for a in np.linspace(0, 2 * np.pi, 4, endpoint=False)]
        sc = make_scenario(ues, bs_total_w=100.0)
        x = (250.0, 250.0, 80.0)
        alloc = allocate(x, sc)
        np.testing.assert_allclose(alloc.p_ues, sc.power.uav_total_w / 4,
                                   rtol=1e-12)
        assert alloc.uav_total == pytest.approx(sc.power.uav_total_w, rel=1e-12)

    def test_k1_large_bs_budget_backs_off_exactly(self):
        sc = make_scenario([[250.0, 250.0, 0.0]], bs_total_w=50.0)
        x = (240.0, 240.0, 70.0)
        alloc = allocate(x, sc)
        assert alloc.p_bs < sc.power.bs_total_w
        assert alloc.uav_total == pytest.approx(sc.power.uav_total_w, rel=1e-12)
        r = min_capacity(x, alloc, sc)
        assert backhaul_rate(x, alloc, sc) == pytest.approx(r, rel=1e-9)

    def test_weak_bs_budget_caps_backhaul(self):
        sc = make_scenario([[100.0, 120.0, 0.0]], bs_total_w=1e-4)
        x = (90.0, 110.0, 60.0)
        alloc = allocate(x, sc)
        assert alloc.p_bs == sc.power.bs_total_w
        assert alloc.uav_total < sc.power.uav_total_w


class TestOptimality:
    def test_k2_beats_grid(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            ues = np.column_stack([rng.uniform(0, 500, 2),
                                   rng.uniform(0, 500, 2), np.zeros(2)])
            sc = make_scenario(ues)
            x = np.array([rng.uniform(0, 500), rng.uniform(0, 500),
                          rng.uniform(50, 200)])
            alloc = allocate(x, sc)
            r_closed = min_capacity(x, alloc, sc)

            # brute-force grid over (P_B, P_1) with P_2 = P_V - P_1
            eta_bs, eta_ue = link_etas(x[None, :], sc)
            w_u, w_b = sc.channel.ue_bandwidth_hz, sc.channel.bs_bandwidth_hz
            pb = np.linspace(1e-9, sc.power.bs_total_w, 1000)
            p1 = np.linspace(1e-9, sc.power.uav_total_w - 1e-9, 1000)
            r_b = (w_b / 2) * np.log2(1 + eta_bs[0] * pb)
            r_1 = w_u * np.log2(1 + eta_ue[0, 0] * p1)
            r_2 = w_u * np.log2(1 + eta_ue[0, 1] * (sc.power.uav_total_w - p1))
            grid_best = np.max(np.minimum(np.minimum(r_1, r_2)[None, :],
                                          r_b[:, None]))
            assert r_closed >= grid_best - 1e-6 * abs(grid_best)


class TestInvariants:
    def _random_cases(self, n=20):
        rng = np.random.default_rng(23)
        for _ in range(n):
            k = int(rng.integers(1, 5))
            ues = np.column_stack([rng.uniform(0, 500, k),
                                   rng.uniform(0, 500, k), np.zeros(k)])
            sc = make_scenario(ues)
            x = np.array([rng.uniform(0, 500), rng.uniform(0, 500),
                          rng.uniform(50, 300)])
            yield x, sc

    def test_equal_rates(self):
        for x, sc in self._random_cases():
            alloc = allocate(x, sc)
            rates = per_ue_rates(x, alloc, sc)
            assert rates.max() - rates.min() <= 1e-9 * rates.min()

    def test_one_budget_binds(self):
        for x, sc in self._random_cases():
            alloc = allocate(x, sc)
            bs_binds = abs(alloc.p_bs - sc.power.bs_total_w) <= 1e-9
            uav_binds = abs(alloc.uav_total - sc.power.uav_total_w) <= 1e-9
            assert bs_binds or uav_binds
            assert alloc.p_bs <= sc.power.bs_total_w * (1 + 1e-12)
            assert alloc.uav_total <= sc.power.uav_total_w + 1e-9

    def test_backhaul_matches_k_times_rate(self):
        for x, sc in self._random_cases():
            alloc = allocate(x, sc)
            r = min_capacity(x, alloc, sc)
            assert abs(backhaul_rate(x, alloc, sc) - sc.num_ues * r) <= 1e-6 * r

    def test_monotone_in_bs_budget(self):
        rng = np.random.default_rng(29)
        ues = np.column_stack([rng.uniform(0, 500, 3), rng.uniform(0, 500, 3),
                               np.zeros(3)])
        x = np.array([200.0, 260.0, 75.0])
        last = 0.0
        for p_tot in (0.01, 0.1, 0.5, 1.0, 5.0, 50.0):
            sc = make_scenario(ues, bs_total_w=p_tot)
            r = min_capacity(x, allocate(x, sc), sc)
            assert r >= last - 1e-9
            last = r

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(31)
        ues = np.column_stack([rng.uniform(0, 500, 4), rng.uniform(0, 500, 4),
                               np.zeros(4)])
        sc = make_scenario(ues)
        pts = np.column_stack([rng.uniform(0, 500, 50), rng.uniform(0, 500, 50),
                               rng.uniform(50, 300, 50)])
        pb, pu = allocate_many(pts, sc)
        for i in (0, 17, 49):
            a = allocate(pts[i], sc)
            assert a.p_bs == pytest.approx(pb[i], rel=1e-14)
            np.testing.assert_allclose(a.p_ues, pu[i], rtol=1e-14)

    def test_zero_distance_rejected(self):
        sc = make_scenario([[100.0, 100.0, 0.0]])
        with pytest.raises(ValueError):
            allocate((100.0, 100.0, 0.0), sc)
