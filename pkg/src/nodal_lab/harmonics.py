"""Real orthonormal hyperspherical harmonics on S^n, n <= 4.

A basis element of H_{n,l} is identified by a chain of degrees
``l = l_n >= l_{n-1} >= ... >= l_1`` plus a cos/sin flag on the circle; level k
contributes the factor

    N * (sin theta_k)^{l_{k-1}} * C^{((k-1)/2 + l_{k-1})}_{l_k - l_{k-1}}(cos theta_k)

where theta_k is the angle from the last coordinate axis of R^{k+1}.  Every
element has unit norm for the (unnormalised) surface measure.  The product
``N * C`` is evaluated as an orthonormal Gegenbauer polynomial through its
three-term recurrence, which keeps degrees in the hundreds well scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .specfun import gauss_jacobi, gegenbauer_scale, jacobi_p, sphere_volume

__all__ = [
    "SpherePoint",
    "HarmonicBasis",
    "WindowBasis",
    "LatLonGrid",
    "dim_harmonics",
    "normalization_constant",
    "build_basis",
    "build_window",
    "window_degrees",
    "zonal",
    "zonal_constant",
    "reproducing_kernel",
    "evaluate_window_grid",
    "sphere_quadrature",
    "random_sphere_points",
]

MAX_DEGREE = {1: 100_000, 2: 200, 3: 60, 4: 60}


def dim_harmonics(n: int, l: int) -> int:
    """Dimension d(n, l) of degree-l harmonics on S^n."""
    if n < 1 or l < 0:
        raise ValueError("need n >= 1 and l >= 0")
    second = math.comb(n + l - 2, n) if l >= 2 else 0
    return math.comb(n + l, n) - second


def normalization_constant(n: int, l: int, m: int) -> float:
    """N_l^m of the inductive construction, through log-gamma."""
    if not 0 <= m <= l:
        raise ValueError("need 0 <= m <= l")
    if n < 2:
        raise ValueError("the inductive constant is defined for n >= 2")
    log_sq = (
        math.lgamma((n + 2 * m + 1) / 2)
        + math.lgamma(n + 2 * m - 1)
        + math.log(2 * l + n - 1)
        + math.lgamma(l - m + 1)
        - 0.5 * math.log(math.pi)
        - math.lgamma((n + 2 * m) / 2)
        - math.log(n + 2 * m - 1)
        - math.lgamma(l + m + n - 1)
    )
    if log_sq / 2 > 700:
        raise OverflowError(f"N_l^m overflows for n={n}, l={l}, m={m}")
    return math.exp(log_sq / 2)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class SpherePoint:
    """Unit vector in R^{n+1}; the last coordinate is the north-pole axis."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or len(c) < 2:
            raise ValueError("coords must be a vector of length >= 2")
        if abs(np.linalg.norm(c) - 1) > 1e-12:
            raise ValueError("coords must have unit norm")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    @classmethod
    def normalized(cls, v) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def north(cls, n: int) -> "SpherePoint":
        c = np.zeros(n + 1)
        c[-1] = 1.0
        return cls(c)

    def angles(self) -> np.ndarray:
        """Hyperspherical angles (theta_n, ..., theta_2, phi).

        theta_k is measured from the last axis of R^{k+1}; phi in [0, 2pi).
        """
        c = self.coords
        out = []
        for k in range(self.n, 1, -1):
            rho = np.linalg.norm(c[: k + 1])
            out.append(math.acos(max(-1.0, min(1.0, c[k] / rho))) if rho > 0 else 0.0)
        out.append(math.atan2(c[1], c[0]) % (2 * math.pi))
        return np.array(out)

    @classmethod
    def from_angles(cls, angles) -> "SpherePoint":
        angles = list(angles)
        phi = angles[-1]
        v = np.array([math.cos(phi), math.sin(phi)])
        for theta in reversed(angles[:-1]):
            v = np.append(math.sin(theta) * v, math.cos(theta))
        return cls(v / np.linalg.norm(v))


def random_sphere_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, n + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# evaluation machinery


def _level_coordinates(points: np.ndarray):
    """Per-level (t_k, s_k) for k = n..2 and the circle angle phi."""
    n = points.shape[1] - 1
    sq = np.cumsum(points**2, axis=1)
    rho = np.sqrt(sq)
    levels = {}
    for k in range(n, 1, -1):
        r_k = rho[:, k]
        safe = r_k > 0
        t = np.where(safe, points[:, k] / np.where(safe, r_k, 1.0), 1.0)
        s = np.where(safe, rho[:, k - 1] / np.where(safe, r_k, 1.0), 0.0)
        levels[k] = (np.clip(t, -1.0, 1.0), np.clip(s, 0.0, 1.0))
    phi = np.arctan2(points[:, 1], points[:, 0])
    return levels, phi


@lru_cache(maxsize=None)
def _recurrence_coefficients(lam: float, kmax: int):
    k = np.arange(1, kmax + 1, dtype=float)
    beta = np.sqrt(k * (k + 2 * lam - 1) / (4 * (k + lam) * (k + lam - 1)))
    log_mu0 = 0.5 * math.log(math.pi) + math.lgamma(lam + 0.5) - math.lgamma(lam + 1)
    return beta, -0.5 * log_mu0


def radial_table(level: int, m: int, kmax: int, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Rows k = 0..kmax of s^m * q_k(t), q_k orthonormal Gegenbauer, lam = (level-1)/2 + m.

    Equals N_{m+k}^m (sin theta)^m C_k^{(lam)}(cos theta) at sphere dimension
    ``level``.
    """
    lam = (level - 1) / 2 + m
    beta, log_q0 = _recurrence_coefficients(lam, max(kmax, 1))
    out = np.empty((kmax + 1,) + t.shape)
    if m == 0:
        out[0] = math.exp(log_q0)
    else:
        with np.errstate(divide="ignore"):
            out[0] = np.exp(m * np.log(s) + log_q0)
    if kmax >= 1:
        out[1] = t * out[0] / beta[0]
    for k in range(1, kmax):
        out[k + 1] = (t * out[k] - beta[k - 1] * out[k - 1]) / beta[k]
    return out


def _trig_rows(m: np.ndarray, flag: np.ndarray, phi: np.ndarray) -> np.ndarray:
    ang = np.outer(m, phi)
    vals = np.where(flag[:, None] == 0, np.cos(ang), np.sin(ang))
    scale = np.where(m == 0, 1 / math.sqrt(2 * math.pi), 1 / math.sqrt(math.pi))
    return vals * scale[:, None]


def _chains(n: int, l: int) -> list[tuple[tuple[int, ...], int]]:
    if n == 1:
        return [((0,), 0)] if l == 0 else [((l,), 0), ((l,), 1)]
    out = []
    for m in range(l + 1):
        for sub, flag in _chains(n - 1, m):
            out.append(((l,) + sub, flag))
    return out


class _ChainEvaluator:
    """Shared evaluation of a list of basis chains (levels n..1)."""

    def __init__(self, n: int, chains: np.ndarray, flags: np.ndarray):
        self.n = n
        self.chains = chains
        self.flags = flags

    def __len__(self) -> int:
        return len(self.flags)

    def evaluate(self, points, chunk: int = 4_000_000) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.n + 1:
            raise ValueError(f"points must live in R^{self.n + 1}")
        step = max(1, chunk // max(len(self), 1))
        if len(points) > step:
            return np.concatenate(
                [self._evaluate(points[i : i + step]) for i in range(0, len(points), step)]
            )
        return self._evaluate(points)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        levels, phi = _level_coordinates(points)
        vals = _trig_rows(self.chains[:, -1], self.flags, phi)
        for k in range(self.n, 1, -1):
            col = self.n - k
            upper, lower = self.chains[:, col], self.chains[:, col + 1]
            t, s = levels[k]
            factor = np.empty_like(vals)
            for m in np.unique(lower):
                sel = lower == m
                kmax = int(upper[sel].max() - m)
                table = radial_table(k, int(m), kmax, t, s)
                factor[sel] = table[upper[sel] - m]
            vals *= factor
        return vals.T


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    """Orthonormal basis of H_{n,l}; ``chains[i]`` = (l, m, ..., l_1)."""

    n: int
    l: int
    chains: np.ndarray
    flags: np.ndarray
    convention: str = "surface-measure"
    _evaluator: _ChainEvaluator = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_evaluator", _ChainEvaluator(self.n, self.chains, self.flags))

    def __len__(self) -> int:
        return len(self.flags)

    @property
    def indices(self) -> list[tuple[tuple[int, ...], str]]:
        return [(tuple(int(v) for v in c), "cs"[f]) for c, f in zip(self.chains, self.flags)]

    def evaluate(self, points) -> np.ndarray:
        """Matrix of shape (n_points, dim) of basis values."""
        return self._evaluator.evaluate(points)


def _check_supported(n: int, l: int) -> None:
    if n not in MAX_DEGREE:
        raise ValueError(f"sphere dimension n={n} unsupported (1..4)")
    if l < 0 or l > MAX_DEGREE[n]:
        raise ValueError(f"degree {l} outside supported range for n={n}")


def build_basis(n: int, l: int) -> HarmonicBasis:
    """Orthonormal basis of H_{n,l} built inductively from S^{n-1}."""
    _check_supported(n, l)
    chains = _chains(n, l)
    arr = np.array([c for c, _ in chains], dtype=int)
    flags = np.array([f for _, f in chains], dtype=int)
    return HarmonicBasis(n=n, l=l, chains=arr, flags=flags)


def window_degrees(d: int, alpha: float) -> list[int]:
    """Degrees l with ceil(alpha d) <= l <= d and d - l even."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    lo = math.ceil(alpha * d - 1e-12)
    return [l for l in range(lo, d + 1) if (d - l) % 2 == 0]


@dataclass(frozen=True, eq=False)
class WindowBasis:
    """Basis of the window H_{[alpha d, d]}; coefficients ordered by degree."""

    n: int
    d: int
    alpha: float
    degrees: tuple[int, ...]
    bases: tuple[HarmonicBasis, ...]
    _evaluator: _ChainEvaluator = field(init=False, repr=False)

    def __post_init__(self):
        chains = np.concatenate([b.chains for b in self.bases])
        flags = np.concatenate([b.flags for b in self.bases])
        object.__setattr__(self, "_evaluator", _ChainEvaluator(self.n, chains, flags))

    @property
    def dimension(self) -> int:
        return len(self._evaluator)

    @property
    def chains(self) -> np.ndarray:
        return self._evaluator.chains

    @property
    def flags(self) -> np.ndarray:
        return self._evaluator.flags

    @property
    def element_degrees(self) -> np.ndarray:
        return self.chains[:, 0]

    def evaluate(self, points) -> np.ndarray:
        return self._evaluator.evaluate(points)


def build_window(n: int, d: int, alpha: float) -> WindowBasis:
    degrees = window_degrees(d, alpha)
    if not degrees:
        raise ValueError("empty degree window")
    bases = tuple(build_basis(n, l) for l in degrees)
    return WindowBasis(n=n, d=d, alpha=float(alpha), degrees=tuple(degrees), bases=bases)


# ---------------------------------------------------------------------------
# zonal harmonics and reproducing kernel


def zonal_constant(n: int, l: int) -> float:
    """c(n, l) such that zonal = c(n, l) P_l^{(a,a)}(cos theta), a = (n-2)/2."""
    if n < 2:
        raise ValueError("zonal_constant needs n >= 2")
    omega = sphere_volume(n - 1)
    return normalization_constant(n, l, 0) * gegenbauer_scale((n - 1) / 2, l) / math.sqrt(omega)


def zonal(n: int, l: int, theta):
    """Unit-norm zonal harmonic of degree l on S^n, as a function of the polar angle."""
    theta = np.asarray(theta, dtype=float)
    if n == 1:
        c = 1 / math.sqrt(2 * math.pi) if l == 0 else 1 / math.sqrt(math.pi)
        return c * np.cos(l * theta)
    a = (n - 2) / 2
    return zonal_constant(n, l) * jacobi_p(l, a, a, np.cos(theta))


def reproducing_kernel(basis: HarmonicBasis, x: SpherePoint, y: SpherePoint) -> float:
    """Z_l(x, y) = sum_i Y_i(x) Y_i(y)."""
    if x.n != basis.n or y.n != basis.n:
        raise ValueError("points and basis live on different spheres")
    vals = basis.evaluate(np.stack([x.coords, y.coords]))
    return float(vals[0] @ vals[1])


# ---------------------------------------------------------------------------
# grids and quadrature


@dataclass(frozen=True)
class LatLonGrid:
    """Cell-centred latitude rows, uniform longitudes, N_phi = 2 N_theta."""

    n_theta: int

    @property
    def n_phi(self) -> int:
        return 2 * self.n_theta

    @property
    def thetas(self) -> np.ndarray:
        return (np.arange(self.n_theta) + 0.5) * np.pi / self.n_theta

    @property
    def phis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    def points(self) -> np.ndarray:
        th, ph = np.meshgrid(self.thetas, self.phis, indexing="ij")
        return np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
        )

    def to_dict(self) -> dict:
        return {"kind": "latlon", "n_theta": self.n_theta, "n_phi": self.n_phi}


def evaluate_window_grid(window: WindowBasis, coeffs, grid: LatLonGrid) -> np.ndarray:
    """Values of sum_i coeffs[i] Y_i on the grid, shape (n_theta, n_phi).

    Each latitude row costs O(D) for the radial sums plus one small matrix
    product over longitudes.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (window.dimension,):
        raise ValueError(f"expected {window.dimension} coefficients, got {coeffs.shape}")
    if window.n != 2:
        pts = grid.points().reshape(-1, window.n + 1)
        return (window.evaluate(pts) @ coeffs).reshape(grid.n_theta, grid.n_phi)
    thetas = grid.thetas
    t, s = np.cos(thetas), np.sin(thetas)
    ls, ms, flags = window.chains[:, 0], window.chains[:, 1], window.flags
    d = int(ls.max())
    # angular modes (m, flag) -> row of the longitude matrix
    mode = 2 * ms + flags
    radial_sums = np.zeros((2 * d + 2, grid.n_theta))
    for m in np.unique(ms):
        sel = ms == m
        table = radial_table(2, int(m), int(ls[sel].max() - m), t, s)
        contrib = table[ls[sel] - m] * coeffs[sel, None]
        np.add.at(radial_sums, mode[sel], contrib)
    mode_m = np.arange(2 * d + 2) // 2
    mode_f = np.arange(2 * d + 2) % 2
    trig = _trig_rows(mode_m, mode_f, grid.phis)
    return radial_sums.T @ trig


def sphere_quadrature(n: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule on S^n exact for polynomials of total degree <= ``degree``."""
    m = degree + 1
    phi = 2 * np.pi * np.arange(m) / m
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = np.full(m, 2 * np.pi / m)
    for k in range(2, n + 1):
        rule = gauss_jacobi(degree // 2 + 1, (k - 2) / 2, (k - 2) / 2)
        t = rule.nodes
        s = np.sqrt(1 - t * t)
        pts = np.concatenate(
            [np.column_stack([si * pts, np.full(len(pts), ti)]) for ti, si in zip(t, s)]
        )
        wts = np.concatenate([wi * wts for wi in rule.weights])
    return pts, wts
