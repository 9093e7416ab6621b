"""Barrier functions and Monte Carlo checks of the barrier lemmas.

The univariate barrier is the Chebyshev polynomial U_d restricted to the
circle; the multivariate one is a normalised sum of zonal harmonics whose
degrees are chosen so every summand is negative on a small circle around
the centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .ensembles import EnsembleSpec, window_for
from .harmonics import SpherePoint, dim_harmonics, radial_table, window_degrees
from .specfun import bessel_landmarks, gauss_jacobi, sphere_volume

__all__ = [
    "UnivariateBarrier",
    "BarrierPoly",
    "BoundaryStatsReport",
    "OmegaReport",
    "chebyshev_u",
    "univariate_barrier",
    "landmarks_for",
    "barrier_radius",
    "construct_barrier",
    "boundary_points",
    "sigma_exact",
    "lemma2_diagnostics",
    "omega_probability",
]


# ---------------------------------------------------------------------------
# univariate barrier


def chebyshev_u(d: int, x):
    """U_d(x) by the three-term recurrence U_{k+1} = 2x U_k - U_{k-1}."""
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), 2 * x
    if d == 0:
        return prev
    for _ in range(d - 1):
        prev, cur = cur, 2 * x * cur - prev
    return cur


@dataclass(frozen=True)
class UnivariateBarrier:
    """U_d(cos t) = sin((d+1)t)/sin t on S^1 and its normalisation.

    ``norm_sq`` comes from a trapezoid rule, exact for trigonometric
    polynomials of degree below the node count.
    """

    d: int
    norm_sq: float
    value_at_zero: float
    rho: float
    value_at_rho: float
    c1_reference: float = 1 / (2 * math.sqrt(2 * math.pi))

    def __call__(self, t):
        return chebyshev_u(self.d, np.cos(t)) / math.sqrt(self.norm_sq)

    @property
    def norm_sq_expected(self) -> float:
        return 2 * math.pi * (self.d + 1)

    @property
    def normalized_at_zero(self) -> float:
        return self.value_at_zero / math.sqrt(self.norm_sq)

    @property
    def normalized_at_rho(self) -> float:
        return self.value_at_rho / math.sqrt(self.norm_sq)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "norm_sq": self.norm_sq,
            "norm_sq_expected": self.norm_sq_expected,
            "norm_sq_stated": 2 * math.pi * self.d,
            "value_at_zero": self.value_at_zero,
            "value_at_zero_stated": self.d,
            "rho": self.rho,
            "value_at_rho": self.value_at_rho,
            "value_at_rho_stated_bound": -self.d / 2,
            "normalized_at_zero": self.normalized_at_zero,
            "normalized_at_rho": self.normalized_at_rho,
            "c1_reference": self.c1_reference,
        }


def univariate_barrier(d: int) -> UnivariateBarrier:
    if d < 2:
        raise ValueError("univariate barrier needs d >= 2")
    m = 4 * d + 8
    t = 2 * np.pi * np.arange(m) / m
    norm_sq = float(2 * np.pi * np.mean(chebyshev_u(d, np.cos(t)) ** 2))
    rho = 3 * math.pi / (2 * (d + 1))
    return UnivariateBarrier(
        d=d,
        norm_sq=norm_sq,
        value_at_zero=float(chebyshev_u(d, 1.0)),
        rho=rho,
        value_at_rho=float(chebyshev_u(d, math.cos(rho))),
    )


# ---------------------------------------------------------------------------
# zonal-sum barrier


@lru_cache(maxsize=None)
def landmarks_for(n: int):
    """First zero and minimum of J_{(n-2)/2}."""
    if n < 2:
        raise ValueError("barrier radius needs n >= 2")
    return bessel_landmarks((n - 2) / 2)


def barrier_radius(n: int, d: int) -> float:
    return 2 * landmarks_for(n).first_min / (2 * d + n - 1)


def _complement_frame(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of x^perp as columns."""
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(len(x))]))
    return q[:, 1 : len(x)]


def boundary_points(x: np.ndarray, r: float, count: int | None = None) -> np.ndarray:
    """Points at geodesic distance r from x: uniform angles on a circle for
    S^2, scrambled-free Halton directions on the boundary sphere otherwise."""
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    frame = _complement_frame(x)
    if n == 2:
        count = count or 1024
        phi = 2 * np.pi * np.arange(count) / count
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    else:
        from scipy.stats import norm

        count = count or 4096
        u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
        dirs = norm.ppf(u)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return math.cos(r) * x + math.sin(r) * dirs @ frame.T


@dataclass(frozen=True, eq=False)
class BarrierPoly:
    """B_x = (sum of unit zonal harmonics centred at x over [mu d, d]) / sqrt(card)."""

    n: int
    d: int
    alpha: float
    mu: float
    center: SpherePoint
    radius: float
    degrees: tuple[int, ...]
    _weights: np.ndarray = field(repr=False)

    @property
    def card(self) -> int:
        return len(self.degrees)

    @property
    def degree(self) -> int:
        return self.d

    def profile(self, theta):
        """B as a function of the angle from the centre."""
        theta = np.asarray(theta, dtype=float)
        table = radial_table(self.n, 0, self.d, np.cos(theta), np.sin(theta))
        return np.tensordot(self._weights, table, axes=1)

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.profile(np.arccos(np.clip(pts @ self.center.coords, -1.0, 1.0)))

    __call__ = evaluate

    def norm_sq(self) -> float:
        """Squared L^2(S^n) norm by Gauss-Jacobi quadrature in cos(theta)."""
        a = (self.n - 2) / 2
        rule = gauss_jacobi(self.d + 1, a, a)
        vals = self.profile(np.arccos(rule.nodes))
        return float(sphere_volume(self.n - 1) * rule.integrate(vals**2))

    def center_value(self) -> float:
        return float(self.profile(0.0))

    def boundary_max(self, count: int | None = None) -> float:
        return float(np.max(self.evaluate(boundary_points(self.center.coords, self.radius, count))))

    def window_ok(self) -> bool:
        """J_{(n-2)/2}((2l + n - 1) r / 2) < 0 for every degree in the window."""
        from .specfun import bessel_j

        nu = (self.n - 2) / 2
        args = [(2 * l + self.n - 1) * self.radius / 2 for l in self.degrees]
        return bool(np.all(np.asarray(bessel_j(nu, np.array(args))) < 0))


def construct_barrier(n: int, d: int, alpha: float, x: SpherePoint | None = None) -> BarrierPoly:
    if not 2 <= n <= 4:
        raise ValueError("barrier supports n in [2, 4]")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    x = x or SpherePoint.north(n)
    if x.n != n:
        raise ValueError("centre lives on a different sphere")
    lm = landmarks_for(n)
    mu = max(alpha, lm.ratio)
    degrees = tuple(window_degrees(d, mu))
    if not degrees:
        raise ValueError(f"empty barrier window [{mu:.4f} d, d] at d = {d}")
    weights = np.zeros(d + 1)
    # unit zonal of degree l is q_l(cos theta) / sqrt(Vol(S^{n-1}))
    weights[list(degrees)] = 1 / math.sqrt(sphere_volume(n - 1) * len(degrees))
    return BarrierPoly(
        n=n,
        d=d,
        alpha=float(alpha),
        mu=mu,
        center=x,
        radius=barrier_radius(n, d),
        degrees=degrees,
        _weights=weights,
    )


# ---------------------------------------------------------------------------
# random-field diagnostics


def _coefficient_chunks(rng: np.random.Generator, trials: int, dim: int, chunk: int = 2000):
    scale = 1 / math.sqrt(dim)
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        yield rng.standard_normal((k, dim)) * scale
        done += k


def sigma_exact(spec: EnsembleSpec, m: int, r: float) -> float:
    """Standard deviation of sum_l xi_l N_l^m C_{l-m}(cos r) over l >= m in the window."""
    d, n = spec.d, spec.n
    degrees = [l for l in window_degrees(d, spec.alpha) if l >= m]
    if not degrees:
        return 0.0
    table = radial_table(n, m, d - m, np.array(math.cos(r)), np.array(1.0))
    vals = np.array([table[l - m] for l in degrees])
    return float(math.sqrt(np.sum(vals**2) / spec.dimension))


def _sigma_indices(spec: EnsembleSpec, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient indices of the (l, m, m, ..., m; cos) elements and their degrees."""
    win = window_for(spec)
    ch, fl = win.chains, win.flags
    mask = np.all(ch[:, 1:] == m, axis=1) & (fl == 0)
    idx = np.flatnonzero(mask)
    return idx, ch[idx, 0]


@dataclass
class BoundaryStatsReport:
    n: int
    d: int
    alpha: float
    radius: float
    trials: int
    max_mean: float
    max_stderr: float
    center_mean: float
    center_stderr: float
    sigma_m: list[int]
    sigma_exact: list[float]
    sigma_empirical: list[float]
    sigma_envelope: list[float]
    bound_chain: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def lemma2_diagnostics(
    spec: EnsembleSpec,
    x: SpherePoint | None,
    trials: int,
    rng: np.random.Generator,
    m_values=(0, 1, 2, 3),
    boundary_count: int | None = None,
) -> BoundaryStatsReport:
    """Monte Carlo E max |f| on the boundary of D(x, r), E |f(x)|, and the
    coefficient standard deviations sigma(m, d) against (2d)^m / m!."""
    if spec.kind != "rfs_window" or not 2 <= spec.n <= 4:
        raise ValueError("lemma2 diagnostics need an rfs_window spec with n in [2, 4]")
    n, d = spec.n, spec.d
    x = x or SpherePoint.north(n)
    r = barrier_radius(n, d)
    win = window_for(spec)
    bvals = win.evaluate(boundary_points(x.coords, r, boundary_count))
    cvals = win.evaluate(x.coords[None, :])[0]
    sel = [_sigma_indices(spec, m) for m in m_values]
    weights = []
    for m, (_, degs) in zip(m_values, sel):
        table = radial_table(n, m, d - m, np.array(math.cos(r)), np.array(1.0))
        weights.append(np.array([table[l - m] for l in degs]))
    maxima, centers = [], []
    hats: list[list[np.ndarray]] = [[] for _ in m_values]
    for coeffs in _coefficient_chunks(rng, trials, win.dimension):
        maxima.append(np.max(np.abs(coeffs @ bvals.T), axis=1))
        centers.append(np.abs(coeffs @ cvals))
        for k, ((idx, _), w) in enumerate(zip(sel, weights)):
            hats[k].append(coeffs[:, idx] @ w)
    maxima = np.concatenate(maxima)
    centers = np.concatenate(centers)
    emp = [float(np.std(np.concatenate(h), ddof=1)) for h in hats]
    exact = [sigma_exact(spec, m, r) for m in m_values]
    chain = sum(
        math.sin(r) ** m * sigma_exact(spec, m, r) * dim_harmonics(n - 1, m) for m in range(d + 1)
    )
    return BoundaryStatsReport(
        n=n,
        d=d,
        alpha=spec.alpha,
        radius=r,
        trials=trials,
        max_mean=float(maxima.mean()),
        max_stderr=float(maxima.std(ddof=1) / math.sqrt(trials)),
        center_mean=float(centers.mean()),
        center_stderr=float(centers.std(ddof=1) / math.sqrt(trials)),
        sigma_m=list(m_values),
        sigma_exact=exact,
        sigma_empirical=emp,
        sigma_envelope=[(2 * d) ** m / math.factorial(m) for m in m_values],
        bound_chain=float(chain),
    )


@dataclass
class OmegaReport:
    """Frequency of {f(x) > 0 and f < 0 on the boundary of D(x, r)}."""

    n: int
    d: int
    radius: float
    trials: int
    hits: int

    @property
    def probability(self) -> float:
        return self.hits / self.trials

    @property
    def stderr(self) -> float:
        p = self.probability
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "radius": self.radius,
            "trials": self.trials,
            "hits": self.hits,
            "probability": self.probability,
            "stderr": self.stderr,
        }


def _joint_factor(cvals: np.ndarray, bvals: np.ndarray, dim: int) -> np.ndarray:
    """L with L L^T = Cov(f(x), f|boundary) under N(0, I/dim) coefficients."""
    a = np.vstack([cvals[None, :], bvals])
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    keep = s > 1e-12 * s[0]
    return u[:, keep] * (s[keep] / math.sqrt(dim))


def omega_probability(
    spec: EnsembleSpec,
    trials: int,
    rng: np.random.Generator,
    x: SpherePoint | None = None,
    boundary_count: int | None = None,
    method: str = "reduced",
) -> OmegaReport:
    """Empirical P(Omega(x, r)).

    ``method="full"`` draws every harmonic coefficient.  ``"reduced"`` draws
    the Gaussian vector (f(x), f on the boundary samples) directly from a
    factor of its covariance, whose rank is at most 2d + 2 on S^2; the law is
    identical and the cost per trial no longer scales with D.
    """
    if spec.kind != "rfs_window" or not 2 <= spec.n <= 4:
        raise ValueError("omega probability needs an rfs_window spec with n in [2, 4]")
    if method not in ("reduced", "full"):
        raise ValueError("method must be 'reduced' or 'full'")
    x = x or SpherePoint.north(spec.n)
    r = barrier_radius(spec.n, spec.d)
    win = window_for(spec)
    bvals = win.evaluate(boundary_points(x.coords, r, boundary_count))
    cvals = win.evaluate(x.coords[None, :])[0]
    hits = 0
    if method == "full":
        for coeffs in _coefficient_chunks(rng, trials, win.dimension):
            ok = (coeffs @ cvals > 0) & (np.max(coeffs @ bvals.T, axis=1) < 0)
            hits += int(ok.sum())
    else:
        factor = _joint_factor(cvals, bvals, win.dimension)
        rank = factor.shape[1]
        done = 0
        while done < trials:
            k = min(20000, trials - done)
            z = rng.standard_normal((k, rank)) @ factor.T
            hits += int(np.sum((z[:, 0] > 0) & (np.max(z[:, 1:], axis=1) < 0)))
            done += k
    return OmegaReport(n=spec.n, d=spec.d, radius=r, trials=trials, hits=hits)
