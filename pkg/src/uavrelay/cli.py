"""Command line front end: scenario generation, batch runs, solver traces.

    uavrelay gen   --config cfg.json --seed 7 --out scenario.json
    uavrelay run   --spec sweep.json --out results/ --trials 25 --seed 0
    uavrelay trace --scenario scenario.json --out trace/

`run` writes trials.csv (one row per trial and scheme), aggregate.csv (means
per sweep point) and summary.txt; identical seeds reproduce the CSVs byte
for byte.  Exit status is 1 if any trial raised (a non-converged trial whose
fallback succeeded is a result, not an error), else 0.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import experiments, scenario


def _cmd_gen(args) -> int:
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        cfg = scenario.GeneratorConfig(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
    elif args.preset == "desk":
        cfg = scenario.desk_config(args.ues)
    else:
        cfg = dataclasses.replace(scenario.GeneratorConfig(), num_ues=args.ues)
    sc = scenario.generate(cfg, args.seed)
    scenario.save(sc, args.out)
    print(f"wrote {args.out}: {len(sc.buildings)} buildings, "
          f"{sc.num_ues} users, seed {args.seed}")
    return 0


def _cmd_run(args) -> int:
    spec = experiments.load_spec(args.spec)
    if args.trials is not None:
        spec = dataclasses.replace(spec, trials=args.trials)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    result = experiments.run_experiment(
        spec, args.out, parallel=args.parallel, resume=args.resume,
        timings=args.timings)
    print(f"wrote {result.trials_csv} and {result.aggregate_csv} "
          f"({len(result.reports)} rows, {result.wall_time_s:.1f} s)")
    for value, trial, err in result.errors:
        print(f"trial failed at value={value} trial={trial}: {err}",
              file=sys.stderr)
    return 1 if result.errors else 0


def _cmd_trace(args) -> int:
    sc = scenario.load(args.scenario)
    out = experiments.write_trace(sc, args.out)
    sol = out["solution"]
    print(f"wrote {out['outer_csv']}, {out['inner_csv']}, {out['path_csv']}")
    print(f"position ({sol.position[0]:.1f}, {sol.position[1]:.1f}, "
          f"{sol.position[2]:.1f}) m, min capacity "
          f"{sol.min_capacity_bps / 1e6:.2f} Mbit/s, "
          f"converged={sol.converged}, fallback={sol.fallback_used}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavrelay", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random scenario file")
    g.add_argument("--config", help="generator config JSON")
    g.add_argument("--preset", choices=["desk"], help="built-in config preset")
    g.add_argument("--ues", type=int, default=8, help="users (without --config)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    r = sub.add_parser("run", help="run an experiment sweep")
    r.add_argument("--spec", required=True, help="experiment spec JSON")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--trials", type=int, help="override trials per point")
    r.add_argument("--seed", type=int, help="override seed base")
    r.add_argument("--parallel", type=int, default=1, help="worker processes")
    r.add_argument("--resume", action="store_true",
                   help="reuse completed trials from a previous journal")
    r.add_argument("--timings", action="store_true",
                   help="also write per-trial wall times (non-deterministic)")
    r.set_defaults(func=_cmd_run)

    t = sub.add_parser("trace", help="solve one scenario and dump its iterations")
    t.add_argument("--scenario", required=True, help="scenario JSON")
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=_cmd_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
