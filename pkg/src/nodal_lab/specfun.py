"""Orthogonal polynomials, Bessel functions, Gauss quadrature.

Everything here is vectorised over the evaluation argument and pure.
Normalisation constants go through ``math.lgamma`` so that degrees of a few
hundred do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "BesselLandmarks",
    "legendre_p",
    "jacobi_p",
    "gegenbauer_p",
    "gegenbauer_scale",
    "bessel_j",
    "bessel_j_prime",
    "bessel_landmarks",
    "gauss_legendre",
    "gauss_jacobi",
    "hilb_error",
    "jacobi_hilb_error",
    "hilb_amplitude",
    "log_binom",
    "sphere_volume",
]

_LOG_MAX = math.log(np.finfo(float).max)


def sphere_volume(n: int) -> float:
    """Surface measure of the unit sphere S^n in R^{n+1}."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def log_binom(top: float, k: float) -> float:
    """log of the generalised binomial coefficient via log-gamma."""
    return math.lgamma(top + 1) - math.lgamma(k + 1) - math.lgamma(top - k + 1)


# ---------------------------------------------------------------------------
# orthogonal polynomials


def legendre_p(l: int, x):
    """Legendre polynomial P_l(x) by the Bonnet recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if l == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for k in range(1, l):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p if p.ndim else float(p)


def jacobi_p(l: int, a: float, b: float, x):
    """Jacobi polynomial P_l^{(a,b)}(x) by the standard three-term recurrence.

    Parameters
    ----------
    l : int
        degree
    a, b : float
        weight exponents, both > -1
    x : array_like
        evaluation points
    """
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if l == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = (a + 1) + (a + b + 2) * (x - 1) / 2
    ab = a + b
    for k in range(1, l):
        c = 2 * k + ab
        a1 = 2 * (k + 1) * (k + ab + 1) * c
        a2 = (c + 1) * (a * a - b * b)
        a3 = c * (c + 1) * (c + 2)
        a4 = 2 * (k + a) * (k + b) * (c + 2)
        p_prev, p = p, ((a2 + a3 * x) * p - a4 * p_prev) / a1
    return p if p.ndim else float(p)


def gegenbauer_scale(lam: float, k: int) -> float:
    """g(lam, k) with C_k^{(lam)} = g(lam, k) * P_k^{(lam-1/2, lam-1/2)}."""
    log_g = (
        math.lgamma(lam + 0.5)
        - math.lgamma(2 * lam)
        + math.lgamma(k + 2 * lam)
        - math.lgamma(k + lam + 0.5)
    )
    if log_g > _LOG_MAX:
        raise OverflowError(f"gegenbauer scale overflows for lam={lam}, k={k}")
    return math.exp(log_g)


def gegenbauer_p(lam: float, k: int, x):
    """Gegenbauer polynomial C_k^{(lam)}(x), lam > 0, routed through Jacobi."""
    if lam <= 0:
        raise ValueError("gegenbauer_p requires lam > 0")
    return gegenbauer_scale(lam, k) * jacobi_p(k, lam - 0.5, lam - 0.5, x)


# ---------------------------------------------------------------------------
# Bessel functions of the first kind

_SERIES_CUTOFF = 8.0


def _bessel_series(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    half = x / 2
    pos = half > 0
    if nu == 0:
        out[~pos] = 1.0
    h = half[pos]
    log_lead = nu * np.log(h) - math.lgamma(nu + 1)
    term = np.exp(log_lead)
    total = term.copy()
    h2 = h * h
    for k in range(1, 80):
        term = -term * h2 / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    out[pos] = total
    return out


def _bessel_integer_integral(n: int, x: np.ndarray) -> np.ndarray:
    # J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt; the periodic
    # trapezoid rule is exponentially accurate once M > x + n + margin.
    m = int(2 * (float(np.max(x)) + n)) + 64
    t = 2 * np.pi * np.arange(m) / m
    return np.cos(n * t[None, :] - x[:, None] * np.sin(t)[None, :]).mean(axis=1)


def _bessel_half_integer(k: int, x: np.ndarray) -> np.ndarray:
    # J_{k+1/2}(x) = sqrt(2x/pi) j_k(x), j_k by upward recurrence (x > k here)
    s, c = np.sin(x), np.cos(x)
    j_prev = s / x
    if k == 0:
        j = j_prev
    else:
        j = s / x**2 - c / x
        for i in range(1, k):
            j_prev, j = j, (2 * i + 1) / x * j - j_prev
    return np.sqrt(2 * x / np.pi) * j


def bessel_j(nu: float, x):
    """Bessel function J_nu(x) for integer or half-integer nu >= 0 and x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j is defined here for x >= 0 only")
    twice = 2 * nu
    if nu < 0 or abs(twice - round(twice)) > 1e-12:
        raise ValueError("order must be a non-negative integer or half-integer")
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    small = flat < _SERIES_CUTOFF
    if np.any(small):
        out[small] = _bessel_series(nu, flat[small])
    if np.any(~small):
        big = flat[~small]
        if abs(nu - round(nu)) < 1e-12:
            out[~small] = _bessel_integer_integral(int(round(nu)), big)
        else:
            out[~small] = _bessel_half_integer(int(round(nu - 0.5)), big)
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


def bessel_j_prime(nu: float, x):
    """Derivative J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x), for x > 0."""
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return -bessel_j(1, x)
    return nu / x * bessel_j(nu, x) - bessel_j(nu + 1, x)


@dataclass(frozen=True)
class BesselLandmarks:
    """First zero and first minimum of J_nu used by the barrier radius."""

    nu: float
    first_zero: float
    first_min: float
    first_max: float | None = None

    @property
    def ratio(self) -> float:
        return self.first_zero / self.first_min


def _bisect(fun, lo: float, hi: float, tol: float = 1e-13) -> float:
    f_lo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def bessel_landmarks(nu: float, step: float = 0.01, limit: float = 30.0) -> BesselLandmarks:
    """Locate the first zero and first minimum of J_nu by scan-then-bisect.

    For nu = 0 the minimum is the first local minimum.  For nu > 0 (where
    J_nu(0) = 0) the zero is the one past the first maximum and the minimum
    is the first one to the right of that zero.
    """
    if nu < 0:
        raise ValueError("nu must be >= 0")
    grid = np.arange(step, limit + step / 2, step)
    vals = np.asarray(bessel_j(nu, grid))
    ders = np.asarray(bessel_j_prime(nu, grid))

    def first_change(arr, start, sign_from):
        for i in range(start, len(arr) - 1):
            if np.sign(arr[i]) == sign_from and np.sign(arr[i + 1]) != sign_from:
                return i
        raise RuntimeError(f"no bracket found for J_{nu} landmarks on [0, {limit}]")

    first_max = None
    start = 0
    if nu > 0:
        i_max = first_change(ders, 0, 1.0)
        first_max = _bisect(lambda t: float(bessel_j_prime(nu, t)), grid[i_max], grid[i_max + 1])
        start = i_max + 1
    i_zero = first_change(vals, start, 1.0)
    zero = _bisect(lambda t: float(bessel_j(nu, t)), grid[i_zero], grid[i_zero + 1])
    i_min = first_change(ders, i_zero, -1.0)
    minimum = _bisect(lambda t: float(bessel_j_prime(nu, t)), grid[i_min], grid[i_min + 1])
    return BesselLandmarks(nu=nu, first_zero=zero, first_min=minimum, first_max=first_max)


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def __len__(self) -> int:
        return len(self.nodes)


def gauss_jacobi(k: int, a: float = 0.0, b: float = 0.0) -> QuadratureRule:
    """k-point Gauss rule for the weight (1-x)^a (1+x)^b on [-1, 1].

    Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
    monic recurrence.
    """
    if k < 1:
        raise ValueError("rule size must be >= 1")
    if a <= -1 or b <= -1:
        raise ValueError("weight exponents must exceed -1")
    ab = a + b
    i = np.arange(k, dtype=float)
    diag = np.empty(k)
    diag[0] = (b - a) / (ab + 2)
    if k > 1:
        c = 2 * i[1:] + ab
        diag[1:] = (b * b - a * a) / (c * (c + 2))
    off = np.empty(max(k - 1, 0))
    if k > 1:
        off[0] = 4 * (1 + a) * (1 + b) / ((2 + ab) ** 2 * (3 + ab))
        j = i[2:k]
        c = 2 * j + ab
        off[1:] = 4 * j * (j + a) * (j + b) * (j + ab) / (c * c * (c + 1) * (c - 1))
    jac = np.diag(diag) + np.diag(np.sqrt(off), 1) + np.diag(np.sqrt(off), -1)
    nodes, vecs = np.linalg.eigh(jac)
    mu0 = math.exp((ab + 1) * math.log(2) + math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(ab + 2))
    weights = mu0 * vecs[0, :] ** 2
    if a == b:
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes=nodes, weights=weights)


def gauss_legendre(k: int) -> QuadratureRule:
    """k-point Gauss-Legendre rule on [-1, 1]; exact through degree 2k-1."""
    return gauss_jacobi(k, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Hilb-type asymptotics


def hilb_error(l: int, theta):
    """R_l(theta) = P_l(cos theta) - sqrt(theta / sin theta) J_0((2l+1) theta / 2)."""
    theta = np.asarray(theta, dtype=float)
    main = np.sqrt(theta / np.sin(theta)) * bessel_j(0, (2 * l + 1) * theta / 2)
    return legendre_p(l, np.cos(theta)) - main


def hilb_amplitude(n: int, l: int) -> float:
    """h(n, l) = N^{(2-n)/2} Gamma(l + n/2) / l!, N = (2l+n-1)/2."""
    big_n = (2 * l + n - 1) / 2
    return math.exp((2 - n) / 2 * math.log(big_n) + math.lgamma(l + n / 2) - math.lgamma(l + 1))


def jacobi_hilb_error(n: int, l: int, theta):
    """Remainder of the Bessel approximation of P_l^{(a,a)}, a = (n-2)/2.

    Returns (sin(t/2) cos(t/2))^a P_l^{(a,a)}(cos t) - h(n,l) sqrt(t/sin t) J_a(N t)
    which reduces to :func:`hilb_error` for n = 2.
    """
    theta = np.asarray(theta, dtype=float)
    a = (n - 2) / 2
    big_n = (2 * l + n - 1) / 2
    lhs = (np.sin(theta / 2) * np.cos(theta / 2)) ** a * jacobi_p(l, a, a, np.cos(theta))
    main = hilb_amplitude(n, l) * np.sqrt(theta / np.sin(theta)) * bessel_j(a, big_n * theta)
    return lhs - main
