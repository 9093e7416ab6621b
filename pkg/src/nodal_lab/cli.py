"""Command line entry point: ``nodal-lab <experiment> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .ensembles import KINDS
from .errors import ConfigError
from .experiments import EXPERIMENTS, ExperimentConfig, parse_sweep
from .harness import emit_report, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3

_FLAG_FIELDS = (
    "experiment",
    "ensemble",
    "n",
    "d",
    "alpha",
    "trials",
    "seed",
    "grid_theta",
    "circles",
    "out",
    "format",
    "sweep",
    "jobs",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nodal-lab",
        description="Monte Carlo experiments on random real algebraic hypersurfaces.",
    )
    p.add_argument("experiment_pos", nargs="?", choices=EXPERIMENTS, metavar="experiment",
                   help=f"one of: {', '.join(EXPERIMENTS)}")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="JSON file with config fields; flags override it")
    p.add_argument("--ensemble", choices=KINDS)
    p.add_argument("--n", type=int, help="sphere dimension")
    p.add_argument("--d", type=int, help="degree")
    p.add_argument("--alpha", type=float, help="window start for rfs_window")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--grid-theta", dest="grid_theta", type=int, help="latitude rows for S^2 extraction")
    p.add_argument("--circles", type=int, help="great circles per Crofton estimate")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--sweep", help="degree sweep, e.g. 'd=4:32:4' or 'd=10,14'")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    if args.experiment_pos and args.experiment and args.experiment_pos != args.experiment:
        raise ConfigError("conflicting experiment names")
    exp = args.experiment_pos or args.experiment
    if exp:
        data["experiment"] = exp
    for name in _FLAG_FIELDS[1:]:
        val = getattr(args, name)
        if val is not None:
            data[name] = parse_sweep(val) if name == "sweep" else val
    if "experiment" not in data:
        raise ConfigError("no experiment given")
    return ExperimentConfig.from_dict(data)


def _summary_line(report) -> str:
    parts = []
    for run in report.runs:
        if run.rows:
            parts.append(f"d={run.d} {run.primary}={run.rows[0][run.primary]}")
            continue
        agg = run.aggregate
        se = agg["stderr"]
        se_txt = f" +/- {se:.4g}" if se is not None else ""
        mean_txt = f"{agg['mean']:.6g}" if agg["mean"] is not None else "nan"
        parts.append(f"d={run.d} {run.primary}={mean_txt}{se_txt} (n={agg['count']}, discarded={len(run.discards)})")
    return "\n".join(parts)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_experiment(cfg)
    texts = emit_report(report, cfg.format, cfg.out)
    if cfg.out is None:
        sys.stdout.write(texts["report"])
    print(_summary_line(report), file=sys.stderr)
    if not report.within_budget:
        print("failure budget exceeded: more than 5% of trials discarded", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
