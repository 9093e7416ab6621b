"""Experiment definitions: configuration, per-trial measurements and the
analytic predictions attached to each report."""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import arrangement, barrier
from .ensembles import (
    KINDS,
    EnsembleSpec,
    design_matrix,
    expected_roots_univariate,
    make_spec,
    parameter_delta,
    parameter_delta_exact,
    sample,
)
from .errors import ConfigError
from .harmonics import MAX_DEGREE, SpherePoint
from .nodal_geometry import (
    circle_samples,
    crofton_volume,
    random_great_circle,
    restrict_to_circle,
    roots_from_samples,
    find_circle_roots,
)
from .specfun import sphere_volume

__all__ = [
    "EXPERIMENTS",
    "TABLE_EXPERIMENTS",
    "PRIMARY_FIELD",
    "ExperimentConfig",
    "parse_sweep",
    "trial_function",
    "predictions",
    "table_row",
]

EXPERIMENTS = (
    "roots",
    "volume",
    "components",
    "energy",
    "empty-ovals",
    "barrier-check",
    "lemma2-check",
    "delta-table",
    "bounds-table",
)
TABLE_EXPERIMENTS = ("delta-table", "bounds-table")
PRIMARY_FIELD = {
    "roots": "roots",
    "volume": "volume",
    "components": "b0_projective",
    "energy": "energy",
    "empty-ovals": "empty_ovals",
    "barrier-check": "omega",
    "lemma2-check": "boundary_max_abs",
    "delta-table": "delta",
    "bounds-table": "milnor_b",
}
SEED_BITS = 64


def parse_sweep(text: str | list | tuple | None) -> tuple[int, ...] | None:
    """'d=4:32:4' (inclusive range) or 'd=10,14' or a list of ints."""
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        vals = [int(v) for v in text]
    else:
        m = re.fullmatch(r"\s*d\s*=\s*(.+)", str(text))
        if not m:
            raise ConfigError(f"sweep must look like 'd=4:32:4' or 'd=10,14', got {text!r}")
        body = m.group(1)
        try:
            if ":" in body:
                parts = [int(p) for p in body.split(":")]
                if len(parts) == 2:
                    parts.append(1)
                if len(parts) != 3 or parts[2] <= 0:
                    raise ValueError
                vals = list(range(parts[0], parts[1] + 1, parts[2]))
            else:
                vals = [int(p) for p in body.split(",")]
        except ValueError:
            raise ConfigError(f"malformed sweep {text!r}") from None
    if not vals:
        raise ConfigError("sweep is empty")
    return tuple(sorted(set(vals)))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    ensemble: str = "rfs_window"
    n: int = 1
    d: int = 4
    alpha: float | None = None
    trials: int = 100
    seed: int = 0
    grid_theta: int | None = None
    circles: int = 200
    sweep: tuple[int, ...] | None = None
    out: str | None = field(default=None, compare=False)
    format: str = field(default="json", compare=False)
    jobs: int = field(default=1, compare=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        data = dict(data)
        if "sweep" in data:
            data["sweep"] = parse_sweep(data["sweep"])
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.sweep if self.sweep else (self.d,)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.ensemble not in KINDS:
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.circles < 1:
            raise ConfigError("circles must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if not 0 <= int(self.seed) < 2**SEED_BITS:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.grid_theta is not None and self.grid_theta < 8:
            raise ConfigError("grid_theta must be >= 8")
        exp = self.experiment
        if exp in ("components", "energy", "empty-ovals") and self.n != 2:
            raise ConfigError(f"{exp} needs n = 2")
        if exp == "volume" and not 2 <= self.n <= 4:
            raise ConfigError("volume needs 2 <= n <= 4")
        if exp in ("barrier-check", "lemma2-check"):
            if self.ensemble != "rfs_window" or not 2 <= self.n <= 4:
                raise ConfigError(f"{exp} needs the rfs_window ensemble with 2 <= n <= 4")
        if exp == "delta-table" and self.ensemble != "rfs_window":
            raise ConfigError("delta-table needs the rfs_window ensemble")
        for d in self.degrees:
            if d < 1:
                raise ConfigError("degrees must be >= 1")
            if exp == "bounds-table":
                continue
            if self.ensemble == "rfs_window" and d > MAX_DEGREE.get(self.n, 0):
                raise ConfigError(f"rfs_window degree {d} exceeds supported range for n = {self.n}")
            if self.grid_theta is not None and exp in ("components", "energy", "empty-ovals"):
                if self.grid_theta < 4 * d:
                    raise ConfigError("grid_theta too coarse for the requested degree")
            try:
                self.spec_for(d)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def spec_for(self, d: int) -> EnsembleSpec:
        alpha = self.alpha if self.ensemble == "rfs_window" else None
        return make_spec(self.ensemble, self.n, d, alpha)

    def to_dict(self) -> dict:
        """Fields that determine results (output options excluded)."""
        out = asdict(self)
        for k in ("out", "format", "jobs"):
            out.pop(k)
        out["sweep"] = list(self.sweep) if self.sweep else None
        return out


# ---------------------------------------------------------------------------
# per-trial measurements


TrialFn = Callable[[np.random.Generator], dict]


def _roots_trial(cfg: ExperimentConfig, d: int) -> TrialFn:
    spec = cfg.spec_for(d)
    if spec.n == 1 and spec.kind != "determinantal":
        t = circle_samples(d)
        pts = np.stack([np.cos(t), np.sin(t)], axis=1)
        mat = design_matrix(spec, pts)
        env = np.abs(mat)

        def run(rng):
            p = sample(spec, rng)

            def direct(tt, sel):
                return p.evaluate(np.stack([np.cos(tt), np.sin(tt)], axis=1))

            roots = roots_from_samples(mat @ p.coeffs, d, env @ np.abs(p.coeffs), evaluate=direct)
            return {"roots": len(roots) / 2, "sphere_roots": len(roots)}

        return run

    def run(rng):
        p = sample(spec, rng)
        circle = random_great_circle(spec.n, rng)
        count = len(find_circle_roots(restrict_to_circle(p, circle), d))
        return {"roots": count / 2, "sphere_roots": count}

    return run


def _volume_trial(cfg: ExperimentConfig, d: int) -> TrialFn:
    spec = cfg.spec_for(d)

    def run(rng):
        p = sample(spec, rng)
        est = crofton_volume(p, cfg.circles, rng)
        return {"volume": est.estimate, "volume_stderr": est.stderr, "circle_resamples": est.resampled}

    return run


def _arrangement_trial(cfg: ExperimentConfig, d: int) -> TrialFn:
    spec = cfg.spec_for(d)
    bounds = arrangement.reference_bounds(2, d)

    def run(rng):
        p = sample(spec, rng)
        s = arrangement.analyze_s2(p, cfg.grid_theta)
        row = {
            "b0_sphere": s.b0_sphere,
            "b0_projective": s.b0_projective,
            "n_domains": s.n_domains,
            "energy": s.energy,
            "empty_ovals": s.empty_ovals,
            "depth": s.depth,
            "one_sided": s.one_sided,
            "length": s.total_length,
            "refined": int(s.refined),
            "euler_ok": int(s.n_domains - 1 == s.b0_sphere),
            "harnack_ok": int(s.b0_projective <= bounds.harnack),
            "milnor_ok": int(s.b0_projective <= bounds.milnor_b),
        }
        lower = bounds.arnold_lower(s.b0_projective)
        if lower is not None:
            row["arnold_ok"] = int(s.empty_ovals >= lower)
        return row

    return run


@lru_cache(maxsize=8)
def _boundary_setup(spec: EnsembleSpec):
    from .ensembles import window_for

    x = SpherePoint.north(spec.n)
    r = barrier.barrier_radius(spec.n, spec.d)
    win = window_for(spec)
    bvals = win.evaluate(barrier.boundary_points(x.coords, r))
    cvals = win.evaluate(x.coords[None, :])[0]
    return win, bvals, cvals


def _barrier_trial(cfg: ExperimentConfig, d: int) -> TrialFn:
    spec = cfg.spec_for(d)
    win, bvals, cvals = _boundary_setup(spec)
    factor = barrier._joint_factor(cvals, bvals, win.dimension)

    def run(rng):
        z = factor @ rng.standard_normal(factor.shape[1])
        bmax = float(np.max(z[1:]))
        return {"omega": int(z[0] > 0 and bmax < 0), "center_value": float(z[0]), "boundary_max": bmax}

    return run


LEMMA2_M = (0, 1, 2, 3)


def _lemma2_trial(cfg: ExperimentConfig, d: int) -> TrialFn:
    spec = cfg.spec_for(d)
    _, bvals, cvals = _boundary_setup(spec)
    r = barrier.barrier_radius(spec.n, d)
    picks = []
    from .harmonics import radial_table

    for m in LEMMA2_M:
        idx, degs = barrier._sigma_indices(spec, m)
        table = radial_table(spec.n, m, max(d - m, 0), np.array(math.cos(r)), np.array(1.0))
        picks.append((idx, np.array([table[l - m] for l in degs])))

    def run(rng):
        c = sample(spec, rng).coeffs
        row = {"boundary_max_abs": float(np.max(np.abs(bvals @ c))), "center_abs": float(abs(cvals @ c))}
        for m, (idx, w) in zip(LEMMA2_M, picks):
            row[f"xi_hat_m{m}"] = float(c[idx] @ w)
        return row

    return run


_TRIALS = {
    "roots": _roots_trial,
    "volume": _volume_trial,
    "components": _arrangement_trial,
    "energy": _arrangement_trial,
    "empty-ovals": _arrangement_trial,
    "barrier-check": _barrier_trial,
    "lemma2-check": _lemma2_trial,
}


def trial_function(cfg: ExperimentConfig, d: int) -> TrialFn:
    return _TRIALS[cfg.experiment](cfg, d)


# ---------------------------------------------------------------------------
# analytic predictions and table rows


def predictions(cfg: ExperimentConfig, d: int) -> dict[str, Any]:
    exp = cfg.experiment
    spec = cfg.spec_for(d)
    n = spec.n
    out: dict[str, Any] = {}
    if exp == "roots":
        if spec.kind == "rfs_window":
            out["sqrt_delta"] = math.sqrt(parameter_delta(spec))
            if n == 1 and spec.alpha == 0:
                out["sqrt_d_d_plus_2_over_3"] = math.sqrt(d * (d + 2) / 3)
        elif spec.kind == "kostlan":
            out["sqrt_d"] = math.sqrt(d)
        elif spec.kind == "naive" and n == 1:
            out["edelman_kostlan"] = expected_roots_univariate(spec)
            out["kac_log"] = 2 / math.pi * math.log(d)
    elif exp == "volume":
        base = sphere_volume(n - 1)
        if spec.kind == "rfs_window":
            out["sqrt_delta_vol"] = math.sqrt(parameter_delta(spec)) * base
            out["sqrt_d_d_plus_2_over_3_vol"] = math.sqrt(d * (d + 2) / 3) * base
        elif spec.kind == "kostlan":
            out["sqrt_d_vol"] = math.sqrt(d) * base
    elif exp in ("components", "energy", "empty-ovals"):
        out.update(arrangement.reference_bounds(2, d).to_dict())
        out.pop("expected_euler_rp3")
    elif exp == "barrier-check":
        b = barrier.construct_barrier(n, d, spec.alpha)
        scale = d ** (n / 2)
        out.update(
            radius=b.radius,
            mu=b.mu,
            window=list(b.degrees),
            norm=math.sqrt(b.norm_sq()),
            center_ratio=b.center_value() / scale,
            boundary_ratio=b.boundary_max() / scale,
            window_negative=b.window_ok(),
        )
    elif exp == "lemma2-check":
        r = barrier.barrier_radius(n, d)
        out["radius"] = r
        out["sigma_exact"] = {f"m{m}": barrier.sigma_exact(spec, m, r) for m in LEMMA2_M}
        out["sigma_envelope"] = {f"m{m}": (2 * d) ** m / math.factorial(m) for m in LEMMA2_M}
        from .harmonics import dim_harmonics

        out["bound_chain"] = sum(
            math.sin(r) ** m * barrier.sigma_exact(spec, m, r) * dim_harmonics(n - 1, m) for m in range(d + 1)
        )
    return out


def table_row(cfg: ExperimentConfig, d: int) -> dict[str, Any]:
    if cfg.experiment == "delta-table":
        spec = cfg.spec_for(d)
        exact = parameter_delta_exact(spec)
        return {
            "d": d,
            "n": spec.n,
            "alpha": spec.alpha,
            "dimension": spec.dimension,
            "delta": float(exact),
            "delta_exact": f"{exact.numerator}/{exact.denominator}",
            "d_d_plus_2_over_3": d * (d + 2) / 3,
        }
    n = cfg.n
    delta = None
    if cfg.ensemble == "rfs_window" and n == 3 and d <= MAX_DEGREE[3]:
        delta = parameter_delta(make_spec("rfs_window", 3, d, cfg.alpha))
    b = arrangement.reference_bounds(n, d, delta)
    row = {"d": d}
    row.update(b.to_dict())
    return row
