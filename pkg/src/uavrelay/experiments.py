"""Batch experiment runner: seeded trials, scheme sweeps, CSV export.

A run is described by an :class:`ExperimentSpec`: either a generator
configuration with one sweep variable (number of users, transmit power
budgets, or building density) or an explicit list of scenario files.  Every
(sweep value, trial) pair maps to a deterministic seed, so re-running a spec
reproduces the output byte for byte.  Trials may be dispatched to a process
pool; results are journaled as they finish (crash-safe, resumable) and the
final CSVs are always rewritten from the journal in canonical order, so the
worker count and completion order never leak into the output.

Wall-clock timings are deliberately kept out of trials.csv and
aggregate.csv; they go to summary.txt and, on request, a separate
timings.csv, keeping the data files deterministic.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, lagrangian, scenario
from .scenario import GeneratorConfig, Scenario

SWEEP_VARS = ("ues", "bs_power_dbm", "uav_power_dbm", "density")
SCHEMES = ("lr", "es3d", "es2d", "center", "free")
SEED_STRIDE = 104729  # seed = base + stride * value_index + trial


class ExperimentError(ValueError):
    """Invalid experiment specification."""


@dataclass(frozen=True)
class ExperimentSpec:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    scenario_files: tuple[str, ...] = ()
    schemes: tuple[str, ...] = ("lr", "es3d", "center", "free")
    sweep_var: str = "ues"
    sweep_values: tuple = (1, 4, 8)
    trials: int = 25
    seed: int = 0
    es3d_spacing_m: float = 5.0
    es2d_spacing_m: float = 5.0
    fixed_altitude_m: float = 100.0

    def validate(self):
        if self.trials < 1:
            raise ExperimentError("need at least one trial per point")
        if not self.scenario_files:
            if self.sweep_var not in SWEEP_VARS:
                raise ExperimentError(f"unknown sweep variable {self.sweep_var!r}")
            if not self.sweep_values:
                raise ExperimentError("sweep values must be nonempty")
        bad = set(self.schemes) - set(SCHEMES)
        if bad or not self.schemes:
            raise ExperimentError(f"unknown schemes {sorted(bad)}")


def spec_from_dict(d: dict) -> ExperimentSpec:
    gen = d.get("generator", {})
    cfg = GeneratorConfig(**{
        k: tuple(v) if isinstance(v, list) else v for k, v in gen.items()})
    sweep = d.get("sweep", {})
    spec = ExperimentSpec(
        generator=cfg,
        scenario_files=tuple(d.get("scenario_files", ())),
        schemes=tuple(d.get("schemes", ("lr", "es3d", "center", "free"))),
        sweep_var=sweep.get("var", "ues"),
        sweep_values=tuple(sweep.get("values", (1, 4, 8))),
        trials=int(d.get("trials", 25)),
        seed=int(d.get("seed", 0)),
        es3d_spacing_m=float(d.get("es3d_spacing_m", 5.0)),
        es2d_spacing_m=float(d.get("es2d_spacing_m", 5.0)),
        fixed_altitude_m=float(d.get("fixed_altitude_m", 100.0)),
    )
    spec.validate()
    return spec


def load_spec(path) -> ExperimentSpec:
    try:
        return spec_from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, TypeError) as exc:
        raise ExperimentError(f"malformed experiment spec: {exc}") from exc


@dataclass
class TrialReport:
    sweep_var: str
    sweep_value: object
    trial: int
    seed: int
    scheme: str
    min_capacity_mbps: float
    converged: bool
    fallback_used: bool
    outer_iters: int
    inner_iters: int
    uav_x_m: float
    uav_y_m: float
    uav_z_m: float
    p_bs_w: float
    p_uav_total_w: float
    wall_time_s: float = 0.0  # reported separately, never in trials.csv

    CSV_FIELDS = ("sweep_var", "sweep_value", "trial", "seed", "scheme",
                  "min_capacity_mbps", "converged", "fallback_used",
                  "outer_iters", "inner_iters", "uav_x_m", "uav_y_m",
                  "uav_z_m", "p_bs_w", "p_uav_total_w")

    def csv_row(self) -> str:
        vals = []
        for name in self.CSV_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool):
                v = int(v)
            vals.append(repr(v) if isinstance(v, float) else str(v))
        return ",".join(vals)


def make_scenario(spec: ExperimentSpec, value, seed: int) -> Scenario:
    cfg = spec.generator
    if spec.sweep_var == "ues":
        cfg = dataclasses.replace(cfg, num_ues=int(value))
    elif spec.sweep_var == "bs_power_dbm":
        cfg = dataclasses.replace(cfg, bs_power_dbm=float(value))
    elif spec.sweep_var == "uav_power_dbm":
        cfg = dataclasses.replace(cfg, uav_power_dbm=float(value))
    elif spec.sweep_var == "density":
        cfg = dataclasses.replace(cfg, density=float(value))
    return scenario.generate(cfg, seed)


def run_trial(spec: ExperimentSpec, value, trial: int) -> list[TrialReport]:
    """All requested schemes on one scenario; shared by workers."""
    if spec.scenario_files:
        sc = scenario.load(spec.scenario_files[int(value)])
        seed = sc.seed
    else:
        seed = spec.seed + SEED_STRIDE * spec.sweep_values.index(value) + trial
        sc = make_scenario(spec, value, seed)

    reports = []

    def report(scheme, pos, p_bs, p_uav_sum, cap_bps, wall, converged=True,
               fallback=False, outer=0, inner=0):
        reports.append(TrialReport(
            sweep_var=spec.sweep_var if not spec.scenario_files else "file",
            sweep_value=value, trial=trial, seed=seed, scheme=scheme,
            min_capacity_mbps=cap_bps / 1e6, converged=converged,
            fallback_used=fallback, outer_iters=outer, inner_iters=inner,
            uav_x_m=float(pos[0]), uav_y_m=float(pos[1]), uav_z_m=float(pos[2]),
            p_bs_w=float(p_bs), p_uav_total_w=float(p_uav_sum),
            wall_time_s=wall))

    for scheme in spec.schemes:
        t0 = time.perf_counter()
        if scheme == "lr":
            sol, _ = lagrangian.solve(sc)
            report("lr", sol.position, sol.p_bs, float(np.sum(sol.p_ues)),
                   sol.min_capacity_bps, time.perf_counter() - t0,
                   converged=sol.converged, fallback=sol.fallback_used,
                   outer=sol.outer_iters, inner=sol.inner_iters_total)
        else:
            if scheme == "es3d":
                r = baselines.es3d(sc, spacing=spec.es3d_spacing_m)
            elif scheme == "es2d":
                r = baselines.es2d(sc, altitude=spec.fixed_altitude_m,
                                   spacing=spec.es2d_spacing_m)
            elif scheme == "center":
                r = baselines.center(sc)
            else:
                r = baselines.free(sc, altitude=spec.fixed_altitude_m)
            report(scheme, r.position, r.p_bs, float(np.sum(r.p_ues)),
                   r.min_capacity_bps, time.perf_counter() - t0)
    return reports


def _task(args):
    spec_dict, value, trial = args
    spec = spec_from_dict(spec_dict)
    try:
        reports = run_trial(spec, value, trial)
        return value, trial, [dataclasses.asdict(r) for r in reports], None
    except Exception as exc:  # reported, trial marked failed
        return value, trial, [], f"{type(exc).__name__}: {exc}"


def spec_to_dict(spec: ExperimentSpec) -> dict:
    d = dataclasses.asdict(spec)
    d["generator"] = dataclasses.asdict(spec.generator)
    d["sweep"] = {"var": spec.sweep_var, "values": list(spec.sweep_values)}
    d.pop("sweep_var")
    d.pop("sweep_values")
    return d


@dataclass
class RunResult:
    trials_csv: Path
    aggregate_csv: Path
    reports: list
    errors: list
    wall_time_s: float


def run_experiment(spec: ExperimentSpec, out_dir, *, parallel: int = 1,
                   resume: bool = False, timings: bool = False) -> RunResult:
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    journal = out / "journal.jsonl"

    values = (list(range(len(spec.scenario_files))) if spec.scenario_files
              else list(spec.sweep_values))
    pending = {(v, t) for v in values for t in range(spec.trials)}
    done: dict[tuple, list] = {}
    if resume and journal.exists():
        for line in journal.read_text().splitlines():
            entry = json.loads(line)
            key = (entry["value"], entry["trial"])
            if entry.get("error") is None and key in pending:
                done[key] = entry["reports"]
                pending.discard(key)
    elif journal.exists():
        journal.unlink()

    t0 = time.perf_counter()
    errors = []
    tasks = [(spec_to_dict(spec), v, t) for (v, t) in sorted(pending, key=str)]
    with journal.open("a") as jf:
        def consume(value, trial, reports, err):
            if err is not None:
                errors.append((value, trial, err))
            else:
                done[(value, trial)] = reports
            jf.write(json.dumps({"value": value, "trial": trial,
                                 "reports": reports, "error": err}) + "\n")
            jf.flush()

        if parallel > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                for value, trial, reports, err in pool.map(_task, tasks):
                    consume(value, trial, reports, err)
        else:
            for args in tasks:
                consume(*_task(args))

    wall = time.perf_counter() - t0
    # canonical order: sweep value (as listed), trial, scheme (as listed)
    reports = []
    for v in values:
        for t in range(spec.trials):
            for rep in done.get((v, t), []):
                reports.append(TrialReport(**rep))
    scheme_rank = {s: i for i, s in enumerate(spec.schemes)}
    reports.sort(key=lambda r: (values.index(r.sweep_value), r.trial,
                                scheme_rank[r.scheme]))

    trials_csv = out / "trials.csv"
    with trials_csv.open("w", newline="") as f:
        f.write(",".join(TrialReport.CSV_FIELDS) + "\n")
        for r in reports:
            f.write(r.csv_row() + "\n")

    aggregate_csv = out / "aggregate.csv"
    with aggregate_csv.open("w", newline="") as f:
        f.write("sweep_var,sweep_value,scheme,trials,mean_min_capacity_mbps\n")
        for v in values:
            for s in spec.schemes:
                caps = [r.min_capacity_mbps for r in reports
                        if r.sweep_value == v and r.scheme == s]
                if caps:
                    f.write(f"{reports[0].sweep_var},{v},{s},{len(caps)},"
                            f"{sum(caps) / len(caps)!r}\n")

    if timings:
        with (out / "timings.csv").open("w", newline="") as f:
            f.write("sweep_value,trial,scheme,wall_time_s\n")
            for r in reports:
                f.write(f"{r.sweep_value},{r.trial},{r.scheme},{r.wall_time_s!r}\n")

    with (out / "summary.txt").open("w") as f:
        f.write(f"trials requested: {len(values) * spec.trials}\n")
        f.write(f"trials completed: {len(done)}\n")
        f.write(f"trials errored:   {len(errors)}\n")
        f.write(f"wall time:        {wall:.1f} s\n")
        for value, trial, err in errors:
            f.write(f"  error at value={value} trial={trial}: {err}\n")

    return RunResult(trials_csv=trials_csv, aggregate_csv=aggregate_csv,
                     reports=reports, errors=errors, wall_time_s=wall)


def write_trace(sc: Scenario, out_dir) -> dict:
    """Solve one scenario and export its iteration history for plotting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol, trace = lagrangian.solve(sc)

    outer_csv = out / "trace_outer.csv"
    with outer_csv.open("w", newline="") as f:
        f.write("outer,q_u_mbps,q_l_mbps,gap_mbps,mu,lambda_max,lambda_l1,"
                "x_m,y_m,z_m,inner_iters\n")
        for o in trace.outer:
            lmax = float(np.max(o.lambdas)) if len(o.lambdas) else 0.0
            l1 = float(np.sum(o.lambdas)) if len(o.lambdas) else 0.0
            f.write(f"{o.T},{o.q_u_mbps!r},{o.q_l_mbps!r},{o.gap_mbps!r},"
                    f"{o.mu!r},{lmax!r},{l1!r},{o.x[0]!r},{o.x[1]!r},"
                    f"{o.x[2]!r},{len(o.inner) - 1}\n")

    inner_csv = out / "trace_inner.csv"
    with inner_csv.open("w", newline="") as f:
        f.write("outer,t,q_u_mbps,step_m,rho_m\n")
        for o in trace.outer:
            for r in o.inner:
                f.write(f"{o.T},{r.t},{r.q_u_mbps!r},{r.step_m!r},{r.rho_m!r}\n")

    path_csv = out / "path.csv"
    with path_csv.open("w", newline="") as f:
        f.write("outer,x_m,y_m,z_m\n")
        for o in trace.outer:
            f.write(f"{o.T},{o.x[0]!r},{o.x[1]!r},{o.x[2]!r}\n")

    return {"solution": sol, "trace": trace, "outer_csv": outer_csv,
            "inner_csv": inner_csv, "path_csv": path_csv}
