"""Closed-form max-min power allocation for a fixed relay position.

For a given position, the backhaul could carry at most
(W_B / K) log2(1 + eta_B P_B_tot) per user at full base-station power, and
the access side at most W_U log2(1 + eta_V P_V_tot) at full relay power,
where eta_B and eta_k are the per-watt SNRs of the individual links under
the LoS model and eta_V is the harmonic aggregate 1 / sum_k(1 / eta_k).
Whichever side is weaker transmits at its full budget; the other side backs
off just enough that the backhaul rate equals K times the common per-user
rate, so no power is wasted.  All UE rates come out equal.

The branch comparison and the back-off exponentials are evaluated in the log
domain: the exponents W_B / K and W_U are bandwidths in hertz, far too large
to exponentiate directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PowerAllocation:
    """Transmit powers (watts): scalar for the BS, one entry per user."""

    p_bs: float
    p_ues: np.ndarray

    @property
    def uav_total(self) -> float:
        return float(np.sum(self.p_ues))


def link_etas(points, scenario):
    """Per-watt LoS SNRs (eta_B, eta_k) at each of N candidate positions."""
    ch = scenario.channel
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d_bs = np.linalg.norm(pts - scenario.bs, axis=1)
    d_ue = np.linalg.norm(pts[:, None, :] - scenario.ues[None, :, :], axis=2)
    if np.any(d_bs <= 0) or np.any(d_ue <= 0):
        raise ValueError("relay position coincides with an endpoint")
    eta_bs = ch.los_gain_1m / (ch.noise_psd_w * ch.bs_bandwidth_hz
                               * d_bs ** ch.los_exponent)
    eta_ue = ch.los_gain_1m / (ch.noise_psd_w * ch.ue_bandwidth_hz
                               * d_ue ** ch.los_exponent)
    return eta_bs, eta_ue


def allocate_many(points, scenario) -> tuple[np.ndarray, np.ndarray]:
    """Optimal (p_bs, p_ues) at each of N positions; vectorized."""
    ch, pw = scenario.channel, scenario.power
    k = scenario.num_ues
    w_u, w_b = ch.ue_bandwidth_hz, ch.bs_bandwidth_hz

    eta_bs, eta_ue = link_etas(points, scenario)
    eta_v = 1.0 / np.sum(1.0 / eta_ue, axis=1)

    backhaul_log = (w_b / k) * np.log1p(eta_bs * pw.bs_total_w)
    access_log = w_u * np.log1p(eta_v * pw.uav_total_w)
    bs_limited = backhaul_log < access_log

    # backhaul-limited: BS at full power, relay backs off to match
    p_ue_1 = np.expm1(backhaul_log / w_u)[:, None] / eta_ue
    # access-limited: relay at full power, BS backs off to match
    p_bs_2 = np.expm1((k / w_b) * access_log) / eta_bs
    p_ue_2 = (eta_v * pw.uav_total_w)[:, None] / eta_ue

    p_bs = np.where(bs_limited, pw.bs_total_w, p_bs_2)
    p_ue = np.where(bs_limited[:, None], p_ue_1, p_ue_2)
    return p_bs, p_ue


def allocate(x, scenario) -> PowerAllocation:
    """Optimal power split at one position (LoS design model)."""
    p_bs, p_ue = allocate_many(np.asarray(x, float)[None, :], scenario)
    return PowerAllocation(p_bs=float(p_bs[0]), p_ues=p_ue[0])
