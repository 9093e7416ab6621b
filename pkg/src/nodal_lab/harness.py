"""Seeded trial execution, aggregation and report emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DegenerateSampleError, TopologyError
from .experiments import (
    PRIMARY_FIELD,
    TABLE_EXPERIMENTS,
    ExperimentConfig,
    predictions,
    table_row,
    trial_function,
)
from .rng import derive_key, trial_rng

__all__ = [
    "SCHEMA_VERSION",
    "MAX_ATTEMPTS",
    "DISCARD_BUDGET",
    "TrialRecord",
    "RunResult",
    "StatsReport",
    "summarize",
    "run_experiment",
    "emit_report",
    "load_report",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MAX_ATTEMPTS = 5
DISCARD_BUDGET = 0.05
Z95 = 1.96
RECOVERABLE = (DegenerateSampleError, TopologyError)


@dataclass
class TrialRecord:
    trial: int
    seed: int
    resamples: int
    values: dict[str, Any]

    def to_dict(self) -> dict:
        return {"trial": self.trial, "seed": self.seed, "resamples": self.resamples, "values": self.values}


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


def summarize(values) -> dict[str, Any]:
    """Mean, sample standard error, 95% interval, extremes."""
    v = np.asarray(values, dtype=float)
    count = len(v)
    if count == 0:
        return {"count": 0, "mean": None, "stderr": None, "ci95": None, "min": None, "max": None}
    mean = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(count)) if count > 1 else float("nan")
    ci = [mean - Z95 * se, mean + Z95 * se] if math.isfinite(se) else None
    return {
        "count": count,
        "mean": mean,
        "stderr": _finite(se),
        "ci95": ci,
        "min": float(v.min()),
        "max": float(v.max()),
    }


@dataclass
class RunResult:
    d: int
    spec: dict
    primary: str
    records: list[TrialRecord] = field(default_factory=list)
    discards: list[dict] = field(default_factory=list)
    predictions: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)

    @property
    def value_fields(self) -> list[str]:
        names: list[str] = []
        for r in self.records:
            for k in r.values:
                if k not in names:
                    names.append(k)
        return names

    def column(self, name: str) -> list:
        return [r.values[name] for r in self.records if name in r.values]

    @property
    def aggregate(self) -> dict:
        if not self.records:
            return summarize([])
        return summarize(self.column(self.primary))

    @property
    def field_aggregates(self) -> dict:
        return {k: summarize(self.column(k)) for k in self.value_fields}

    @property
    def discard_fraction(self) -> float:
        total = len(self.records) + len(self.discards)
        return len(self.discards) / total if total else 0.0

    def to_dict(self) -> dict:
        out = {"d": self.d, "spec": self.spec, "primary": self.primary, "predictions": self.predictions}
        if self.rows:
            out["rows"] = self.rows
            return out
        out.update(
            trials_completed=len(self.records),
            discarded=len(self.discards),
            aggregate=self.aggregate,
            fields=self.field_aggregates,
            discards=self.discards,
            trials=[r.to_dict() for r in self.records],
        )
        return out


@dataclass
class StatsReport:
    config: ExperimentConfig
    runs: list[RunResult]

    @property
    def within_budget(self) -> bool:
        return all(r.discard_fraction <= DISCARD_BUDGET for r in self.runs)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.config.experiment,
            "config": self.config.to_dict(),
            "within_budget": self.within_budget,
            "runs": [r.to_dict() for r in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------------------
# execution


def _run_trials(cfg: ExperimentConfig, d: int, indices: list[int]) -> list[tuple[int, Any]]:
    """Run a block of trials; each returns a TrialRecord or a discard note."""
    fn = trial_function(cfg, d)
    out = []
    for t in indices:
        last = None
        for attempt in range(MAX_ATTEMPTS):
            rng = trial_rng(cfg.seed, t, attempt)
            try:
                values = fn(rng)
            except RECOVERABLE as exc:
                last = exc
                continue
            out.append((t, TrialRecord(t, derive_key(cfg.seed, t, attempt), attempt, values)))
            break
        else:
            log.warning("trial %d discarded after %d attempts: %s", t, MAX_ATTEMPTS, last)
            out.append((t, {"trial": t, "error": f"{type(last).__name__}: {last}"}))
    return out


def _blocks(total: int, parts: int) -> list[list[int]]:
    size = max(1, math.ceil(total / parts))
    return [list(range(s, min(s + size, total))) for s in range(0, total, size)]


def _execute(cfg: ExperimentConfig, d: int) -> list[tuple[int, Any]]:
    if cfg.jobs == 1 or cfg.trials == 1:
        return _run_trials(cfg, d, list(range(cfg.trials)))
    blocks = _blocks(cfg.trials, 4 * cfg.jobs)
    results: list[tuple[int, Any]] = []
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        for part in pool.map(_run_trials, [cfg] * len(blocks), [d] * len(blocks), blocks):
            results.extend(part)
    return results


def run_experiment(cfg: ExperimentConfig) -> StatsReport:
    """Run every degree of the configuration and aggregate by trial index."""
    cfg.validate()
    runs = []
    for d in cfg.degrees:
        spec_dict = cfg.spec_for(d).to_dict() if cfg.experiment != "bounds-table" else {"n": cfg.n, "d": d}
        run = RunResult(d=d, spec=spec_dict, primary=PRIMARY_FIELD[cfg.experiment])
        if cfg.experiment in TABLE_EXPERIMENTS:
            run.rows = [table_row(cfg, d)]
            runs.append(run)
            continue
        run.predictions = predictions(cfg, d)
        for _, item in sorted(_execute(cfg, d), key=lambda p: p[0]):
            if isinstance(item, TrialRecord):
                run.records.append(item)
            else:
                run.discards.append(item)
        if cfg.experiment == "lemma2-check":
            run.predictions["sigma_empirical"] = {
                k.replace("xi_hat_", ""): float(np.std(run.column(k), ddof=1)) if len(run.records) > 1 else None
                for k in run.value_fields
                if k.startswith("xi_hat_")
            }
        runs.append(run)
    return StatsReport(config=cfg, runs=runs)


# ---------------------------------------------------------------------------
# output


def _csv_text(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> Any:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def report_csv(report: StatsReport) -> str:
    """One row per trial and one aggregate footer row per run."""
    if report.config.experiment in TABLE_EXPERIMENTS:
        rows = [r for run in report.runs for r in run.rows]
        header = list(rows[0].keys())
        return _csv_text([[_fmt(r[k]) for k in header] for r in rows], header)
    names: list[str] = []
    for run in report.runs:
        for k in run.value_fields:
            if k not in names:
                names.append(k)
    header = ["d", "trial", "seed", "resamples"] + names
    rows = []
    for run in report.runs:
        for rec in run.records:
            rows.append([run.d, rec.trial, rec.seed, rec.resamples] + [_fmt(rec.values.get(k)) for k in names])
        agg = run.field_aggregates
        rows.append(
            [run.d, "aggregate", "", sum(r.resamples for r in run.records)]
            + [_fmt(agg[k]["mean"]) if k in agg else "" for k in names]
        )
    return _csv_text(rows, header)


def plot_csv(report: StatsReport) -> str:
    """x = d, y = mean of the primary measurement, yerr = its stderr."""
    rows = []
    for run in sorted(report.runs, key=lambda r: r.d):
        if run.rows:
            rows.append([run.d, _fmt(run.rows[0][run.primary]), ""])
        else:
            agg = run.aggregate
            rows.append([run.d, _fmt(agg["mean"]), _fmt(agg["stderr"])])
    return _csv_text(rows, ["d", "mean", "stderr"])


def emit_report(report: StatsReport, fmt: str = "json", path: str | Path | None = None) -> dict[str, str]:
    """Render the report; write it when ``path`` is given.

    Returns a mapping from output kind to text.  Sweep configurations also
    produce plot data, written next to ``path`` with a ``.plot.csv`` suffix.
    """
    if fmt not in ("json", "csv"):
        raise ValueError("format must be json or csv")
    texts = {"report": report.to_json() if fmt == "json" else report_csv(report)}
    if report.config.sweep:
        texts["plot"] = plot_csv(report)
    if path is not None:
        p = Path(path)
        p.write_text(texts["report"], encoding="utf-8", newline="\n")
        if "plot" in texts:
            plot_path = p.with_name(p.stem + ".plot.csv")
            plot_path.write_text(texts["plot"], encoding="utf-8", newline="\n")
    return texts


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
