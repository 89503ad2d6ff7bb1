"""Large-scale channel gains and link capacities.

Path loss follows the distance power law g = beta * d^-alpha with one
(alpha, beta) pair for line-of-sight links and a worse pair for obstructed
links.  A link of bandwidth W carrying power P then achieves

    W * log2(1 + P * beta / (N0 * W * d^alpha))   [bit/s]

All quantities are linear SI units (watts, hertz, meters); conversions from
dB happen once, at scenario load.  The carrier frequency is carried as
metadata only; the reference gains absorb it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import segment_blocked_mask


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * np.log10(w) + 30.0


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants; defaults follow a dense-urban 5 GHz setup."""

    los_exponent: float = 2.0
    los_gain_1m: float = db_to_linear(-46.43)
    nlos_exponent: float = 3.3
    nlos_gain_1m: float = db_to_linear(-56.43)
    noise_psd_w: float = dbm_to_watts(-174.0)  # W/Hz
    ue_bandwidth_hz: float = 5e6
    bs_bandwidth_hz: float = 40e6
    carrier_hz: float = 5e9  # metadata only

    def __post_init__(self):
        for name in ("los_exponent", "los_gain_1m", "nlos_exponent",
                     "nlos_gain_1m", "noise_psd_w", "ue_bandwidth_hz",
                     "bs_bandwidth_hz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PowerParams:
    """Transmit power budgets, watts."""

    bs_total_w: float = dbm_to_watts(30.0)
    uav_total_w: float = dbm_to_watts(30.0)

    def __post_init__(self):
        if self.bs_total_w <= 0 or self.uav_total_w <= 0:
            raise ValueError("power budgets must be positive")


def capacity_bps(distance_m, power_w, bandwidth_hz: float, alpha: float,
                 beta: float, noise_psd_w: float):
    """Shannon capacity of a power-law link; broadcasts over arrays."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distance must be positive")
    snr = np.asarray(power_w, dtype=float) * beta / (noise_psd_w * bandwidth_hz * d ** alpha)
    return bandwidth_hz * np.log1p(snr) / np.log(2.0)


def link_capacity(x, endpoint, power_w: float, bandwidth_hz: float,
                  los: bool, params: ChannelParams) -> float:
    """Capacity of the relay-to-endpoint link with the LoS or NLoS model."""
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(endpoint, float)))
    alpha = params.los_exponent if los else params.nlos_exponent
    beta = params.los_gain_1m if los else params.nlos_gain_1m
    return float(capacity_bps(d, power_w, bandwidth_hz, alpha, beta,
                              params.noise_psd_w))


def _per_link_capacities(points, p_bs, p_ues, scenario, los_bs, los_ues):
    """Backhaul and per-user capacities at N candidate positions.

    ``los_bs`` is an (N,) bool mask, ``los_ues`` an (N, K) bool mask.
    """
    ch = scenario.channel
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d_bs = np.linalg.norm(pts - scenario.bs, axis=1)
    d_ue = np.linalg.norm(pts[:, None, :] - scenario.ues[None, :, :], axis=2)

    def cap(d, p, w, los):
        a = np.where(los, ch.los_exponent, ch.nlos_exponent)
        b = np.where(los, ch.los_gain_1m, ch.nlos_gain_1m)
        snr = p * b / (ch.noise_psd_w * w * d ** a)
        return w * np.log1p(snr) / np.log(2.0)

    r_bs = cap(d_bs, np.asarray(p_bs, float), ch.bs_bandwidth_hz, los_bs)
    r_ue = cap(d_ue, np.atleast_2d(np.asarray(p_ues, float)),
               ch.ue_bandwidth_hz, los_ues)
    return r_bs, r_ue


def min_capacity_many(points, p_bs, p_ues, scenario, assume_los: bool = False):
    """End-to-end min capacity min(min_k R_k, R_B / K) at N positions.

    With ``assume_los`` every link uses the LoS model; otherwise each link's
    model is chosen by the exact segment-versus-building test, which is what
    the physical environment does to a deployed relay.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, k = len(pts), scenario.num_ues
    if assume_los:
        los_bs = np.ones(n, dtype=bool)
        los_ue = np.ones((n, k), dtype=bool)
    else:
        los_bs = ~segment_blocked_mask(scenario.bs, pts, scenario.buildings)
        los_ue = np.empty((n, k), dtype=bool)
        for j in range(k):
            los_ue[:, j] = ~segment_blocked_mask(scenario.ues[j], pts,
                                                 scenario.buildings)
    r_bs, r_ue = _per_link_capacities(pts, p_bs, p_ues, scenario, los_bs, los_ue)
    return np.minimum(r_ue.min(axis=1), r_bs / k)


def min_capacity_actual(x, p_bs, p_ues, scenario) -> float:
    """Min capacity at one position in the actual LoS/NLoS environment."""
    return float(min_capacity_many(np.asarray(x, float)[None, :], p_bs,
                                   np.atleast_2d(p_ues), scenario)[0])


def min_capacity_los(x, p_bs, p_ues, scenario) -> float:
    """Min capacity at one position under the all-LoS design model."""
    return float(min_capacity_many(np.asarray(x, float)[None, :], p_bs,
                                   np.atleast_2d(p_ues), scenario,
                                   assume_los=True)[0])
