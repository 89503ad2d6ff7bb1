"""Random Manhattan-style instances and scenario file I/O.

Buildings sit on a regular grid of cells, one per cell, centered at
(pitch*(i+1/2), pitch*(j+1/2)).  Footprint sides are uniform on
[0.7 s*, 1.3 s*] with s* = pitch * sqrt(density), so the expected built-up
ratio equals the density target.  Heights are Rayleigh with the requested
mean, redrawn until they land inside the clip interval (rejection keeps the
shape of the distribution).  Users are dropped uniformly over the area and
redrawn while they land inside (or within a small margin of) a footprint.

Randomness comes from ``numpy.random.default_rng`` (PCG64) seeded per
scenario, with a fixed draw order (per cell: length, width, then height
redraws; then users), so a seed pins the instance exactly across runs.

Scenario files are JSON with units in the field names.  Canonical files
store linear units (watts, Hz, linear gains), which round-trip losslessly;
the loader also accepts the ``*_dbm`` / ``*_db`` spellings and converts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ChannelParams, PowerParams, db_to_linear, dbm_to_watts
from .geometry import AreaBounds, Building

UE_FOOTPRINT_MARGIN_M = 0.5


class ScenarioError(ValueError):
    """Invalid scenario file or generator configuration."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for the random scenario generator."""

    area_m: tuple[float, float] = (500.0, 500.0)
    grid: tuple[int, int] = (5, 5)
    density: float = 0.20
    mean_height_m: float = 23.0
    height_clip_m: tuple[float, float] = (3.0, 50.0)
    num_ues: int = 8
    h_min_m: float = 50.0
    h_max_m: float = 500.0
    bs_xyz_m: tuple[float, float, float] = (0.0, 0.0, 25.0)
    bs_power_dbm: float = 30.0
    uav_power_dbm: float = 30.0
    ue_bandwidth_hz: float = 5e6

    @property
    def pitch_m(self) -> tuple[float, float]:
        return (self.area_m[0] / self.grid[0], self.area_m[1] / self.grid[1])

    def validate(self):
        if self.num_ues < 1:
            raise ScenarioError("need at least one user")
        if not 0.0 < self.density < 1.0:
            raise ScenarioError("density must be in (0, 1)")
        px, py = self.pitch_m
        side = 1.3 * min(px, py) * np.sqrt(self.density)
        if side >= min(px, py):
            raise ScenarioError(
                f"density {self.density} unreachable with grid pitch "
                f"{min(px, py):.1f} m (footprints would overlap)")
        lo, hi = self.height_clip_m
        if not 0 < lo < hi:
            raise ScenarioError("height clip bounds must be ordered and positive")
        if self.h_min_m < hi:
            raise ScenarioError("minimum flight altitude below tallest possible roof")


def desk_config(num_ues: int = 4, **overrides) -> GeneratorConfig:
    """Quarter-scale world that keeps laptop runtimes small."""
    return replace(
        GeneratorConfig(area_m=(250.0, 250.0), grid=(3, 3), num_ues=num_ues),
        **overrides)


@dataclass
class Scenario:
    """One problem instance: world geometry plus radio parameters."""

    bounds: AreaBounds
    bs: np.ndarray
    ues: np.ndarray  # (K, 3), ground users at z = 0
    buildings: list[Building]
    channel: ChannelParams
    power: PowerParams
    seed: int = 0

    def __post_init__(self):
        self.bs = np.asarray(self.bs, dtype=float)
        self.ues = np.atleast_2d(np.asarray(self.ues, dtype=float))
        self.validate()

    @property
    def num_ues(self) -> int:
        return len(self.ues)

    def validate(self):
        if self.num_ues < 1:
            raise ScenarioError("need at least one user")
        tallest = max((b.height for b in self.buildings), default=0.0)
        if self.bounds.h_min_m < tallest:
            raise ScenarioError("minimum flight altitude below tallest building")
        for b in self.buildings:
            if not (0 <= b.xmin and b.xmax <= self.bounds.x_m
                    and 0 <= b.ymin and b.ymax <= self.bounds.y_m):
                raise ScenarioError("building footprint outside the area")
        for k, u in enumerate(self.ues):
            if not (0 <= u[0] <= self.bounds.x_m and 0 <= u[1] <= self.bounds.y_m):
                raise ScenarioError(f"user {k} outside the area")
            if any(b.footprint_contains(u) for b in self.buildings):
                raise ScenarioError(f"user {k} inside a building footprint")


def _draw_height(rng: np.random.Generator, mean: float,
                 clip: tuple[float, float]) -> float:
    scale = mean * np.sqrt(2.0 / np.pi)  # Rayleigh mean = scale * sqrt(pi/2)
    for _ in range(10_000):
        h = float(rng.rayleigh(scale))
        if clip[0] <= h <= clip[1]:
            return h
    raise ScenarioError("height rejection sampling did not terminate")


def generate(config: GeneratorConfig, seed: int) -> Scenario:
    """Draw one scenario; deterministic in (config, seed)."""
    config.validate()
    rng = np.random.default_rng(seed)
    px, py = config.pitch_m
    s_star_x = px * np.sqrt(config.density)
    s_star_y = py * np.sqrt(config.density)

    buildings = []
    for i in range(config.grid[0]):
        for j in range(config.grid[1]):
            length = float(rng.uniform(0.7 * s_star_x, 1.3 * s_star_x))
            width = float(rng.uniform(0.7 * s_star_y, 1.3 * s_star_y))
            height = _draw_height(rng, config.mean_height_m, config.height_clip_m)
            buildings.append(Building(
                center_xy=(px * (i + 0.5), py * (j + 0.5)),
                length=length, width=width, height=height))

    ues = []
    for _ in range(config.num_ues):
        for _ in range(10_000):
            p = rng.uniform((0.0, 0.0), config.area_m)
            if not any(b.footprint_contains(p, margin=UE_FOOTPRINT_MARGIN_M)
                       for b in buildings):
                ues.append([p[0], p[1], 0.0])
                break
        else:
            raise ScenarioError("no room left for users")

    channel = ChannelParams(
        ue_bandwidth_hz=config.ue_bandwidth_hz,
        bs_bandwidth_hz=config.num_ues * config.ue_bandwidth_hz)
    power = PowerParams(bs_total_w=dbm_to_watts(config.bs_power_dbm),
                        uav_total_w=dbm_to_watts(config.uav_power_dbm))
    bounds = AreaBounds(x_m=config.area_m[0], y_m=config.area_m[1],
                        h_min_m=config.h_min_m, h_max_m=config.h_max_m)
    return Scenario(bounds=bounds, bs=np.array(config.bs_xyz_m),
                    ues=np.array(ues), buildings=buildings,
                    channel=channel, power=power, seed=seed)


# --- JSON round trip ---------------------------------------------------------

def _get_linear(d: dict, base: str, db_key: str | None = None,
                dbm_key: str | None = None, default=None):
    if base in d:
        return float(d[base])
    if db_key and db_key in d:
        return db_to_linear(float(d[db_key]))
    if dbm_key and dbm_key in d:
        return dbm_to_watts(float(d[dbm_key]))
    if default is not None:
        return default
    raise ScenarioError(f"missing field {base!r}")


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "seed": sc.seed,
        "area": {"x_m": sc.bounds.x_m, "y_m": sc.bounds.y_m,
                 "h_min_m": sc.bounds.h_min_m, "h_max_m": sc.bounds.h_max_m},
        "bs_xyz_m": list(map(float, sc.bs)),
        "ues_xy_m": [[float(u[0]), float(u[1])] for u in sc.ues],
        "buildings": [
            {"center_xy_m": [float(b.center_xy[0]), float(b.center_xy[1])],
             "length_m": b.length, "width_m": b.width, "height_m": b.height}
            for b in sc.buildings],
        "channel": {
            "los_exponent": sc.channel.los_exponent,
            "los_gain_1m": sc.channel.los_gain_1m,
            "nlos_exponent": sc.channel.nlos_exponent,
            "nlos_gain_1m": sc.channel.nlos_gain_1m,
            "noise_psd_w_per_hz": sc.channel.noise_psd_w,
            "ue_bandwidth_hz": sc.channel.ue_bandwidth_hz,
            "bs_bandwidth_hz": sc.channel.bs_bandwidth_hz,
            "carrier_hz": sc.channel.carrier_hz,
        },
        "power": {"bs_total_w": sc.power.bs_total_w,
                  "uav_total_w": sc.power.uav_total_w},
    }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        area = d["area"]
        ch = d.get("channel", {})
        pw = d.get("power", {})
        defaults = ChannelParams()
        channel = ChannelParams(
            los_exponent=float(ch.get("los_exponent", defaults.los_exponent)),
            los_gain_1m=_get_linear(ch, "los_gain_1m", db_key="los_gain_1m_db",
                                    default=defaults.los_gain_1m),
            nlos_exponent=float(ch.get("nlos_exponent", defaults.nlos_exponent)),
            nlos_gain_1m=_get_linear(ch, "nlos_gain_1m", db_key="nlos_gain_1m_db",
                                     default=defaults.nlos_gain_1m),
            noise_psd_w=_get_linear(ch, "noise_psd_w_per_hz",
                                    dbm_key="noise_psd_dbm_per_hz",
                                    default=defaults.noise_psd_w),
            ue_bandwidth_hz=float(ch.get("ue_bandwidth_hz", defaults.ue_bandwidth_hz)),
            bs_bandwidth_hz=float(ch.get("bs_bandwidth_hz", defaults.bs_bandwidth_hz)),
            carrier_hz=float(ch.get("carrier_hz", defaults.carrier_hz)),
        )
        power = PowerParams(
            bs_total_w=_get_linear(pw, "bs_total_w", dbm_key="bs_total_dbm"),
            uav_total_w=_get_linear(pw, "uav_total_w", dbm_key="uav_total_dbm"),
        )
        bounds = AreaBounds(x_m=float(area["x_m"]), y_m=float(area["y_m"]),
                            h_min_m=float(area["h_min_m"]),
                            h_max_m=float(area.get("h_max_m", 500.0)))
        buildings = [
            Building(center_xy=tuple(b["center_xy_m"]), length=float(b["length_m"]),
                     width=float(b["width_m"]), height=float(b["height_m"]))
            for b in d.get("buildings", [])]
        ues = np.array([[u[0], u[1], 0.0] for u in d["ues_xy_m"]], dtype=float)
        return Scenario(bounds=bounds, bs=np.array(d["bs_xyz_m"], dtype=float),
                        ues=ues, buildings=buildings, channel=channel,
                        power=power, seed=int(d.get("seed", 0)))
    except (KeyError, TypeError, IndexError) as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc


def save(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


def load(path) -> Scenario:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not valid JSON: {exc}") from exc
    return scenario_from_dict(d)
