"""Gaussian ensembles of homogeneous polynomials and their analytic parameters."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .harmonics import SpherePoint, WindowBasis, build_window, dim_harmonics, window_degrees
from .specfun import gauss_legendre

__all__ = [
    "KINDS",
    "EnsembleSpec",
    "RandomPoly",
    "MomentCurveReport",
    "make_spec",
    "sample",
    "evaluate",
    "parameter_delta",
    "parameter_delta_exact",
    "expected_roots_univariate",
    "edelman_kostlan_integral",
    "monomial_exponents",
    "multinomial",
    "window_for",
    "design_matrix",
]

KINDS = ("rfs_window", "kostlan", "naive", "determinantal")


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n: int
    d: int
    alpha: float | None = None

    @property
    def dimension(self) -> int:
        if self.kind == "rfs_window":
            return sum(dim_harmonics(self.n, l) for l in window_degrees(self.d, self.alpha))
        if self.kind in ("kostlan", "naive"):
            return math.comb(self.d + self.n, self.n)
        return 3 * self.d * (self.d + 1) // 2

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "d": self.d, "alpha": self.alpha}


def make_spec(kind: str, n: int, d: int, alpha: float | None = None) -> EnsembleSpec:
    """Validated ensemble specification."""
    if kind not in KINDS:
        raise ValueError(f"unknown ensemble kind {kind!r}; expected one of {KINDS}")
    if d < 1:
        raise ValueError("degree must be >= 1")
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    if kind == "rfs_window":
        if alpha is None:
            alpha = 0.0
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if n > 4:
            raise ValueError("rfs_window supports n <= 4")
        if not window_degrees(d, alpha):
            raise ValueError("empty degree window")
        return EnsembleSpec(kind, n, d, float(alpha))
    if alpha is not None and kind != "rfs_window":
        raise ValueError("alpha only applies to rfs_window")
    if kind == "determinantal" and n != 2:
        raise ValueError("determinantal curves live on S^2 (n = 2)")
    return EnsembleSpec(kind, n, d, None)


@lru_cache(maxsize=64)
def window_for(spec: EnsembleSpec) -> WindowBasis:
    return build_window(spec.n, spec.d, spec.alpha)


@lru_cache(maxsize=64)
def monomial_exponents(n: int, d: int) -> np.ndarray:
    """All exponent vectors a in N^{n+1} with |a| = d, lexicographic."""
    rows = [a for a in itertools.product(range(d + 1), repeat=n + 1) if sum(a) == d]
    return np.array(sorted(rows, reverse=True), dtype=int)


def multinomial(d: int, a: Sequence[int]) -> int:
    out = math.factorial(d)
    for ai in a:
        out //= math.factorial(ai)
    return out


def _monomial_matrix(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    d = int(exps.max()) if exps.size else 0
    powers = np.ones((points.shape[0], points.shape[1], d + 1))
    if d:
        powers[:, :, 1:] = np.cumprod(np.repeat(points[:, :, None], d, axis=2), axis=2)
    out = powers[:, 0, exps[:, 0]]
    for v in range(1, points.shape[1]):
        out = out * powers[:, v, exps[:, v]]
    return out


def design_matrix(spec: EnsembleSpec, points) -> np.ndarray:
    """Matrix B with f(points) = B @ coeffs for the linear ensembles."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if spec.kind == "rfs_window":
        return window_for(spec).evaluate(pts)
    if spec.kind in ("kostlan", "naive"):
        return _monomial_matrix(pts, monomial_exponents(spec.n, spec.d))
    raise ValueError("determinantal polynomials are not linear in their coefficients")


# ---------------------------------------------------------------------------
# sampled polynomials


@dataclass(frozen=True, eq=False)
class RandomPoly:
    """A sampled polynomial: harmonic, monomial or determinantal coefficients."""

    spec: EnsembleSpec
    coeffs: np.ndarray
    seed: int | None = None

    @property
    def degree(self) -> int:
        return self.spec.d

    @property
    def n(self) -> int:
        return self.spec.n

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        kind = self.spec.kind
        if kind == "rfs_window":
            return window_for(self.spec).evaluate(pts) @ self.coeffs
        if kind in ("kostlan", "naive"):
            return _monomial_matrix(pts, monomial_exponents(self.spec.n, self.spec.d)) @ self.coeffs
        mats = np.einsum("pi,ijk->pjk", pts, self.coeffs)
        return np.linalg.det(mats)

    def envelope(self, points) -> np.ndarray:
        """Pointwise magnitude scale sum_i |c_i| |b_i(x)| used for degeneracy tests."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        kind = self.spec.kind
        if kind == "rfs_window":
            return np.abs(window_for(self.spec).evaluate(pts)) @ np.abs(self.coeffs)
        if kind in ("kostlan", "naive"):
            mono = _monomial_matrix(np.abs(pts), monomial_exponents(self.spec.n, self.spec.d))
            return mono @ np.abs(self.coeffs)
        # Hadamard-type bound: product of row norms of the pencil
        mats = np.einsum("pi,ijk->pjk", pts, self.coeffs)
        return np.prod(np.linalg.norm(mats, axis=2), axis=1)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "seed": self.seed,
            "coeffs": self.coeffs.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "RandomPoly":
        s = data["spec"]
        spec = make_spec(s["kind"], s["n"], s["d"], s.get("alpha"))
        return cls(spec=spec, coeffs=np.asarray(data["coeffs"], dtype=float), seed=data.get("seed"))

    @classmethod
    def from_json(cls, text: str) -> "RandomPoly":
        return cls.from_dict(json.loads(text))


def sample(spec: EnsembleSpec, rng: np.random.Generator, seed: int | None = None) -> RandomPoly:
    """Draw one polynomial from the ensemble.

    rfs_window coefficients are N(0, 1/D) so that E ||f||^2 = 1 in L^2(S^n);
    Kostlan monomial coefficients are xi_a sqrt(multinomial(d; a)); naive ones
    are i.i.d. standard normal; determinantal uses three GOE matrices
    (off-diagonal variance 1, diagonal variance 2).
    """
    kind = spec.kind
    if kind == "rfs_window":
        dim = spec.dimension
        coeffs = rng.standard_normal(dim) / math.sqrt(dim)
    elif kind == "kostlan":
        exps = monomial_exponents(spec.n, spec.d)
        weights = np.sqrt([float(multinomial(spec.d, a)) for a in exps])
        coeffs = rng.standard_normal(len(exps)) * weights
    elif kind == "naive":
        coeffs = rng.standard_normal(len(monomial_exponents(spec.n, spec.d)))
    else:
        g = rng.standard_normal((3, spec.d, spec.d))
        coeffs = (g + np.transpose(g, (0, 2, 1))) / math.sqrt(2)
    return RandomPoly(spec=spec, coeffs=coeffs, seed=seed)


def evaluate(poly: RandomPoly, x) -> np.ndarray | float:
    """Evaluate at a SpherePoint (scalar result) or an array of points."""
    if isinstance(x, SpherePoint):
        if x.n != poly.spec.n:
            raise ValueError("point and polynomial live on different spheres")
        return float(poly.evaluate(x.coords[None, :])[0])
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[1] != poly.spec.n + 1:
        raise ValueError("dimension mismatch between points and polynomial")
    return poly.evaluate(pts)


# ---------------------------------------------------------------------------
# analytic parameters


def parameter_delta_exact(spec: EnsembleSpec) -> Fraction:
    """delta = (1/(n D)) sum_l l (l + n - 1) d(n, l) over the window, exactly."""
    if spec.kind != "rfs_window":
        raise ValueError("delta is defined here for rfs_window ensembles")
    degrees = window_degrees(spec.d, spec.alpha)
    n = spec.n
    total = sum(l * (l + n - 1) * dim_harmonics(n, l) for l in degrees)
    dim = sum(dim_harmonics(n, l) for l in degrees)
    return Fraction(total, n * dim)


def parameter_delta(spec: EnsembleSpec) -> float:
    return float(parameter_delta_exact(spec))


@dataclass
class MomentCurveReport:
    """Numerical moment-curve integral (1/pi) int ||gamma'(t)|| dt."""

    a: float
    b: float
    nodes: np.ndarray
    speeds: np.ndarray
    norms: np.ndarray
    integral: float

    @property
    def expected_zeros(self) -> float:
        return self.integral / math.pi


def edelman_kostlan_integral(
    basis: Callable[[np.ndarray], np.ndarray] | Sequence[Callable],
    interval: tuple[float, float],
    k: int = 64,
    panels: int = 1,
    step: float = 1e-6,
) -> MomentCurveReport:
    """Integrate the speed of gamma = c/|c|, c(t) = (f_1(t), ..., f_K(t)).

    ``basis`` is either a vectorised callable returning an array of shape
    (len(t), K) or a sequence of scalar-vectorised callables.  The derivative
    uses central differences of width ``step``; the integral a composite
    Gauss-Legendre rule with ``panels`` panels of ``k`` nodes.
    """
    if callable(basis):
        curve = basis
    else:
        funcs = list(basis)

        def curve(t):
            return np.stack([np.asarray(f(t), dtype=float) * np.ones_like(t) for f in funcs], axis=1)

    a, b = interval
    rule = gauss_legendre(k)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mids = (edges[:-1] + edges[1:]) / 2
    nodes = (mids[:, None] + half[:, None] * rule.nodes[None, :]).ravel()
    weights = (half[:, None] * rule.weights[None, :]).ravel()

    def unit(t):
        c = curve(t)
        nrm = np.linalg.norm(c, axis=1)
        if np.any(nrm == 0):
            raise ValueError("degenerate basis: c(t) vanishes on the interval")
        return c / nrm[:, None], nrm

    _, norms = unit(nodes)
    g_plus, _ = unit(nodes + step)
    g_minus, _ = unit(nodes - step)
    speeds = np.linalg.norm(g_plus - g_minus, axis=1) / (2 * step)
    return MomentCurveReport(
        a=a, b=b, nodes=nodes, speeds=speeds, norms=norms, integral=float(weights @ speeds)
    )


def _circle_curve(spec: EnsembleSpec) -> Callable[[np.ndarray], np.ndarray]:
    if spec.kind == "rfs_window":
        window = window_for(spec)
        return lambda t: window.evaluate(np.stack([np.cos(t), np.sin(t)], axis=1))
    exps = monomial_exponents(1, spec.d)
    if spec.kind == "kostlan":
        w = np.sqrt([float(multinomial(spec.d, a)) for a in exps])
    else:
        w = np.ones(len(exps))
    return lambda t: _monomial_matrix(np.stack([np.cos(t), np.sin(t)], axis=1), exps) * w


def expected_roots_univariate(spec: EnsembleSpec, numeric: bool = False) -> float:
    """Expected number of projective roots for n = 1.

    Closed forms: sqrt(delta) for rfs_window (sqrt(d(d+2)/3) when alpha = 0),
    sqrt(d) for Kostlan.  The naive ensemble, and ``numeric=True``, go
    through the moment-curve integral over the full circle (halved).
    """
    if spec.n != 1:
        raise ValueError("univariate expectation needs n = 1")
    if spec.kind == "determinantal":
        raise ValueError("determinantal ensemble is bivariate-projective only")
    if not numeric and spec.kind == "rfs_window":
        return math.sqrt(parameter_delta(spec))
    if not numeric and spec.kind == "kostlan":
        return math.sqrt(spec.d)
    panels = max(8, spec.d)
    rep = edelman_kostlan_integral(_circle_curve(spec), (0.0, 2 * math.pi), k=32, panels=panels)
    return rep.expected_zeros / 2
