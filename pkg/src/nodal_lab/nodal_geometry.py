"""Metric properties of zero sets: roots on great circles, Crofton volume,
and nodal-curve extraction on S^2."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateSampleError, TopologyError
from .harmonics import LatLonGrid, evaluate_window_grid
from .specfun import sphere_volume

__all__ = [
    "GreatCircle",
    "CircleRestriction",
    "SphereFunction",
    "CroftonEstimate",
    "NodalExtract",
    "random_great_circle",
    "restrict_to_circle",
    "find_circle_roots",
    "roots_from_samples",
    "circle_samples",
    "count_roots_on_circle",
    "crofton_volume",
    "extract_nodal_s2",
    "default_n_theta",
]

DEGENERACY_RATIO = 1e-12
MIN_ROOT_GAP = 1e-8
ROOT_TOL = 1e-10


class SphereFunction:
    """Deterministic function on S^n with a known degree (for anchors and tests)."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], degree: int, n: int = 2):
        self.func = func
        self.degree = degree
        self.n = n

    def evaluate(self, points) -> np.ndarray:
        return np.asarray(self.func(np.atleast_2d(np.asarray(points, dtype=float))), dtype=float)

    __call__ = evaluate


def _degree(poly) -> int:
    return int(getattr(poly, "degree"))


# ---------------------------------------------------------------------------
# great circles and root counting


@dataclass(frozen=True)
class GreatCircle:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if abs(u @ u - 1) > 1e-12 or abs(v @ v - 1) > 1e-12 or abs(u @ v) > 1e-12:
            raise ValueError("u, v must be an orthonormal pair")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.cos(t)[..., None] * self.u + np.sin(t)[..., None] * self.v


def _orthonormal_pairs(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = g[:, 0] / np.linalg.norm(g[:, 0], axis=1, keepdims=True)
    w = g[:, 1] - np.sum(g[:, 1] * u, axis=1, keepdims=True) * u
    v = w / np.linalg.norm(w, axis=1, keepdims=True)
    # one more projection pass keeps u.v at rounding level
    v = v - np.sum(v * u, axis=1, keepdims=True) * u
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return u, v


def random_great_circle(n: int, rng: np.random.Generator) -> GreatCircle:
    """Uniform great circle on S^n via two orthonormalised Gaussian vectors."""
    u, v = _orthonormal_pairs(rng.standard_normal((1, 2, n + 1)))
    return GreatCircle(u[0], v[0])


class CircleRestriction:
    """g(t) = f(cos t u + sin t v), a trigonometric polynomial of degree <= d."""

    def __init__(self, poly, circle: GreatCircle):
        self.poly = poly
        self.circle = circle
        self.degree = _degree(poly)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.poly.evaluate(self.circle.points(t.ravel())).reshape(t.shape)

    def envelope(self, t):
        if not hasattr(self.poly, "envelope"):
            return None
        t = np.asarray(t, dtype=float)
        return self.poly.envelope(self.circle.points(t.ravel())).reshape(t.shape)


def restrict_to_circle(poly, circle: GreatCircle) -> CircleRestriction:
    return CircleRestriction(poly, circle)


def _sample_count(d: int) -> int:
    return 8 * d + 64


def _check_degenerate(vals: np.ndarray, env: np.ndarray | None) -> np.ndarray:
    """Boolean mask of rows (last axis = samples) with a near-zero sample."""
    if env is None:
        scale = np.max(np.abs(vals), axis=-1, keepdims=True)
    else:
        scale = env
    return np.any(np.abs(vals) <= DEGENERACY_RATIO * scale, axis=-1)


def _bisect_brackets(fun, lo, hi, f_lo, tol=ROOT_TOL):
    lo, hi = lo.copy(), hi.copy()
    pos_lo = f_lo > 0
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        same = (f_mid > 0) == pos_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


INTERP_FLOOR = 1e-6
GOLDEN = (math.sqrt(5) - 1) / 2
# Bernstein: |g''| <= d^2 max|g|; sampled maxima at m >= 8d + 64 points
# undershoot max|g| by far less than this factor
SUP_SAFETY = 2.0


def _evaluate_rows(tt, rows, trusted, spec, k, direct) -> np.ndarray:
    """g_row(t) for each (t, row): Fourier interpolant where ``trusted``,
    ``direct(t, rows)`` elsewhere."""
    out = np.empty(len(tt))
    if np.any(trusted):
        i = rows[trusted]
        out[trusted] = np.real(np.einsum("ij,ij->i", spec[i], np.exp(1j * tt[trusted, None] * k[None, :])))
    if not np.all(trusted):
        out[~trusted] = direct(tt[~trusted], rows[~trusted])
    return out


def _hidden_pairs(vals, t, h, scale, spec, k, direct):
    """Brackets for root pairs that fall between two samples of equal sign.

    Such a pair shows up as a same-sign local minimum of |g| over the
    samples.  Candidates that a second-order Taylor bound cannot rule out
    get a golden-section search for the extremum on the two adjacent
    intervals; a sign change there yields two brackets.
    """
    prev = np.roll(vals, 1, axis=1)
    nxt = np.roll(vals, -1, axis=1)
    a = np.abs(vals)
    pos = vals > 0
    cand = (pos == (prev > 0)) & (pos == (nxt > 0)) & (a <= np.abs(prev)) & (a <= np.abs(nxt))
    rows, cols = np.nonzero(cand)
    empty = np.empty(0)
    if len(rows) == 0:
        return np.empty(0, dtype=int), empty, empty, empty
    trusted = a[rows, cols] >= INTERP_FLOOR * scale[rows]
    d = len(k) - 1
    slope = np.abs(np.real(np.einsum("ij,ij->i", spec[rows] * (1j * k), np.exp(1j * t[cols, None] * k[None, :]))))
    curv = d * d * SUP_SAFETY * scale[rows]
    keep = ~trusted | (a[rows, cols] - slope * h - 0.5 * curv * h * h <= 0)
    rows, cols, trusted = rows[keep], cols[keep], trusted[keep]
    if len(rows) == 0:
        return np.empty(0, dtype=int), empty, empty, empty
    sgn = np.sign(vals[rows, cols])

    def fun(tt):
        return sgn * _evaluate_rows(tt, rows, trusted, spec, k, direct)

    lo = t[cols] - h
    hi = t[cols] + h
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while np.max(hi - lo) > MIN_ROOT_GAP and not np.all(np.minimum(f1, f2) < 0):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - GOLDEN * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + GOLDEN * (hi - lo))
        new = np.where(left, nx1, nx2)
        fn = fun(new)
        f1, f2 = np.where(left, fn, f2), np.where(left, f1, fn)
        x1, x2 = nx1, nx2
    t_min = np.where(f1 < f2, x1, x2)
    f_min = np.minimum(f1, f2)
    local = np.maximum(np.abs(prev[rows, cols]), np.abs(nxt[rows, cols]))
    if np.any(np.abs(f_min) <= DEGENERACY_RATIO * local):
        raise DegenerateSampleError("near-tangent zero between samples")
    hit = f_min < 0
    return rows[hit], t[cols[hit]] - h, t_min[hit], t[cols[hit]] + h


def _circle_roots(vals, d, scale, direct, tol=ROOT_TOL):
    """Roots of each sample row (a degree-d trigonometric polynomial on m
    uniform points).  Returns (row index, root) arrays.

    Sign changes bracket most roots.  Root pairs hidden between samples
    are recovered by ``_hidden_pairs``.  Bisection runs on the exact
    Fourier interpolant of the samples where it is well conditioned and
    on ``direct(t, rows)`` where the local magnitude sits below
    INTERP_FLOOR times the row maximum.
    """
    R, m = vals.shape
    t = 2 * np.pi * np.arange(m) / m
    h = 2 * np.pi / m
    spec, k = _trig_interpolant(vals, d)
    rows, cols = np.nonzero((vals > 0) != (np.roll(vals, -1, axis=1) > 0))
    lo, hi = t[cols], t[cols] + h
    f_lo, f_hi = vals[rows, cols], vals[rows, (cols + 1) % m]
    p_rows, p_lo, p_mid, p_hi = _hidden_pairs(vals, t, h, scale, spec, k, direct)
    if len(p_rows):
        # f(p_mid) has the opposite sign of the pair's outer samples
        outer = vals[p_rows, np.rint(p_lo / h + 1).astype(int) % m]
        rows = np.concatenate([rows, p_rows, p_rows])
        lo = np.concatenate([lo, p_lo, p_mid])
        hi = np.concatenate([hi, p_mid, p_hi])
        f_lo = np.concatenate([f_lo, outer, -outer])
        f_hi = np.concatenate([f_hi, -outer, outer])
    trusted = np.maximum(np.abs(f_lo), np.abs(f_hi)) >= INTERP_FLOOR * scale[rows]
    roots = _bisect_brackets(
        lambda tt: _evaluate_rows(tt, rows, trusted, spec, k, direct), lo, hi, f_lo, tol
    ) % (2 * np.pi)
    return rows, roots


def _gaps_ok(roots: np.ndarray) -> bool:
    if len(roots) < 2:
        return True
    r = np.sort(roots)
    gaps = np.diff(np.append(r, r[0] + 2 * np.pi))
    return bool(np.min(gaps) >= MIN_ROOT_GAP)


def _trig_interpolant(vals: np.ndarray, d: int):
    """Exact evaluator of a degree-d trigonometric polynomial from m > 2d
    uniform samples along the last axis."""
    m = vals.shape[-1]
    spec = np.fft.rfft(vals, axis=-1)[..., : d + 1] / m
    spec[..., 1:] *= 2
    k = np.arange(d + 1)
    return spec, k


def roots_from_samples(
    vals: np.ndarray,
    d: int,
    envelope: np.ndarray | None = None,
    tol: float = ROOT_TOL,
    evaluate=None,
) -> np.ndarray:
    """Zeros on [0, 2pi) of the degree-d trigonometric polynomial sampled at
    m > 2d uniform points ``vals``.

    ``evaluate(t, rows)`` evaluates the polynomial directly (``rows`` is
    all zeros here); without it the Fourier interpolant is used throughout.
    Raises DegenerateSampleError when a sample sits below the degeneracy
    threshold or two roots are closer than 1e-8.
    """
    vals = np.asarray(vals, dtype=float)
    m = len(vals)
    if m <= 2 * d:
        raise ValueError("need more than 2d samples")
    if _check_degenerate(vals, envelope):
        raise DegenerateSampleError("sample value below degeneracy threshold")
    row = vals[None, :]
    if evaluate is None:
        spec, k = _trig_interpolant(row, d)

        def evaluate(tt, rows):
            return np.real(np.exp(1j * np.outer(tt, k)) @ spec[0])

    _, roots = _circle_roots(row, d, np.array([np.max(np.abs(vals))]), evaluate, tol)
    if not _gaps_ok(roots):
        raise DegenerateSampleError("two roots closer than the separation floor")
    return np.sort(roots)


def find_circle_roots(g, d: int, tol: float = ROOT_TOL, samples: int | None = None) -> np.ndarray:
    """Zeros of the restriction g (trigonometric polynomial of degree <= d)
    found from 8d + 64 uniform samples."""
    m = samples or _sample_count(d)
    t = 2 * np.pi * np.arange(m) / m
    env = g.envelope(t) if hasattr(g, "envelope") else None
    return roots_from_samples(g(t), d, env, tol, evaluate=lambda tt, sel: g(tt))


def circle_samples(d: int) -> np.ndarray:
    """The uniform sample angles used for degree-d root counting."""
    m = _sample_count(d)
    return 2 * np.pi * np.arange(m) / m


def count_roots_on_circle(g, d: int, tol: float = ROOT_TOL) -> int:
    """Number of zeros of the trigonometric polynomial g on [0, 2pi)."""
    return len(find_circle_roots(g, d, tol))


# ---------------------------------------------------------------------------
# Crofton estimator


@dataclass
class CroftonEstimate:
    estimate: float
    stderr: float
    counts: np.ndarray
    resampled: int = 0


def _batched_circle_counts(poly, u: np.ndarray, v: np.ndarray, d: int):
    """Root counts on a batch of circles; returns (counts, degenerate mask)."""
    m = _sample_count(d)
    t = 2 * np.pi * np.arange(m) / m
    c, s = np.cos(t), np.sin(t)
    pts = c[None, :, None] * u[:, None, :] + s[None, :, None] * v[:, None, :]
    flat = pts.reshape(-1, pts.shape[-1])
    vals = poly.evaluate(flat).reshape(len(u), m)
    env = poly.envelope(flat).reshape(len(u), m) if hasattr(poly, "envelope") else None
    bad = _check_degenerate(vals, env)

    def direct(tt, rows):
        return poly.evaluate(np.cos(tt)[:, None] * u[rows] + np.sin(tt)[:, None] * v[rows])

    good = np.flatnonzero(~bad)
    counts = np.zeros(len(u), dtype=int)
    if len(good):
        # g has degree d < m/2, so the Fourier coefficients of the samples are exact
        sub = vals[good]
        rows, roots = _circle_roots(
            sub, d, np.max(np.abs(sub), axis=1), lambda tt, r: direct(tt, good[r])
        )
        counts[good] = np.bincount(rows, minlength=len(good))
        for r in np.unique(rows):
            if not _gaps_ok(roots[rows == r]):
                bad[good[r]] = True
    counts[bad] = 0
    return counts, bad


def crofton_volume(poly, n_circles: int, rng: np.random.Generator, max_attempts: int = 5) -> CroftonEstimate:
    """Estimate Vol(Z_{S^n}(f)) as Vol(S^{n-1})/2 times the mean root count
    over uniform random great circles."""
    if n_circles < 1:
        raise ValueError("need at least one circle")
    n = int(getattr(poly, "n"))
    if n > 4:
        raise ValueError("crofton_volume supports n <= 4")
    d = _degree(poly)
    u, v = _orthonormal_pairs(rng.standard_normal((n_circles, 2, n + 1)))
    counts, bad = _batched_circle_counts(poly, u, v, d)
    resampled = 0
    for _ in range(max_attempts):
        if not np.any(bad):
            break
        idx = np.flatnonzero(bad)
        resampled += len(idx)
        nu, nv = _orthonormal_pairs(rng.standard_normal((len(idx), 2, n + 1)))
        c2, b2 = _batched_circle_counts(poly, nu, nv, d)
        counts[idx] = c2
        bad[idx] = b2
    if np.any(bad):
        raise DegenerateSampleError("circle sampling stayed degenerate after resampling")
    half = sphere_volume(n - 1) / 2
    est = half * counts.mean()
    err = half * counts.std(ddof=1) / math.sqrt(n_circles) if n_circles > 1 else float("nan")
    return CroftonEstimate(estimate=float(est), stderr=float(err), counts=counts, resampled=resampled)


# ---------------------------------------------------------------------------
# nodal extraction on S^2


def default_n_theta(d: int) -> int:
    return max(64, 16 * d)


def _sph(theta, phi) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(eq=False)
class NodalExtract:
    """Sign grid and piecewise-linear nodal curves of f on S^2.

    Node ids: grid node (i, j) -> i * n_phi + j; north pole -> n_theta * n_phi,
    south pole -> that + 1.  Crossing vertices sit on crossed grid edges, one
    vertex per edge; ``segments`` pair vertex indices and every vertex has
    degree two, so each connected component is a closed polyline.
    """

    grid: LatLonGrid
    degree: int
    values: np.ndarray
    pole_values: tuple[float, float]
    node_edges: np.ndarray
    node_edge_same: np.ndarray
    vertex_edge: np.ndarray
    vertices: np.ndarray
    segments: np.ndarray
    curve_labels: np.ndarray
    n_curves: int
    lengths: np.ndarray
    antipodal_edge: np.ndarray = field(repr=False)
    edge_to_vertex: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.grid.n_theta * self.grid.n_phi + 2

    @property
    def node_signs(self) -> np.ndarray:
        return np.concatenate([self.values.ravel() > 0, np.array(self.pole_values) > 0])

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def polylines(self) -> list[np.ndarray]:
        """Closed polylines as ordered vertex arrays (first vertex not repeated)."""
        nbrs = [[] for _ in range(len(self.vertices))]
        for a, b in self.segments:
            nbrs[a].append(b)
            nbrs[b].append(a)
        seen = np.zeros(len(self.vertices), dtype=bool)
        out = []
        for start in range(len(self.vertices)):
            if seen[start]:
                continue
            loop = [start]
            seen[start] = True
            prev, cur = -1, start
            while True:
                a, b = nbrs[cur]
                nxt = b if a == prev else a
                if nxt == start or seen[nxt]:
                    break
                loop.append(nxt)
                seen[nxt] = True
                prev, cur = cur, nxt
            out.append(self.vertices[loop])
        return out

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "degree": self.degree,
            "n_curves": self.n_curves,
            "lengths": self.lengths.tolist(),
            "components": [p.tolist() for p in self.polylines()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _grid_values(poly, grid: LatLonGrid) -> tuple[np.ndarray, np.ndarray]:
    spec = getattr(poly, "spec", None)
    if spec is not None and spec.kind == "rfs_window":
        from .ensembles import window_for

        vals = evaluate_window_grid(window_for(spec), poly.coeffs, grid)
    else:
        vals = poly.evaluate(grid.points().reshape(-1, 3)).reshape(grid.n_theta, grid.n_phi)
    poles = poly.evaluate(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]))
    return vals, poles


def _edge_tables(grid: LatLonGrid):
    nt, nph = grid.n_theta, grid.n_phi
    nodes = np.arange(nt * nph).reshape(nt, nph)
    north, south = nt * nph, nt * nph + 1
    th, ph = grid.thetas, grid.phis
    dph = 2 * np.pi / nph
    ii, jj = np.meshgrid(np.arange(nt), np.arange(nph), indexing="ij")
    # horizontal edges (i, j) -> (i, j+1)
    h_a = nodes.ravel()
    h_b = np.roll(nodes, -1, axis=1).ravel()
    h_ta = th[ii].ravel()
    h_pa = ph[jj].ravel()
    h_tb, h_pb = h_ta, h_pa + dph
    # vertical edges (i, j) -> (i+1, j)
    v_a = nodes[:-1].ravel()
    v_b = nodes[1:].ravel()
    v_ta = th[ii[:-1]].ravel()
    v_tb = th[ii[1:]].ravel()
    v_pa = ph[jj[:-1]].ravel()
    v_pb = v_pa
    # radial edges pole -> row 0 / pole -> last row
    rn_a = np.full(nph, north)
    rn_b = nodes[0]
    rs_a = np.full(nph, south)
    rs_b = nodes[-1]
    a = np.concatenate([h_a, v_a, rn_a, rs_a])
    b = np.concatenate([h_b, v_b, rn_b, rs_b])
    ta = np.concatenate([h_ta, v_ta, np.zeros(nph), np.full(nph, np.pi)])
    tb = np.concatenate([h_tb, v_tb, np.full(nph, th[0]), np.full(nph, th[-1])])
    pa = np.concatenate([h_pa, v_pa, ph, ph])
    pb = np.concatenate([h_pb, v_pb, ph, ph])
    off_v = nt * nph
    off_rn = off_v + (nt - 1) * nph
    off_rs = off_rn + nph
    # antipodal edge map
    anti_i = nt - 1 - ii
    anti_j = (jj + nt) % nph
    h_anti = (anti_i * nph + anti_j).ravel()
    v_anti = (off_v + (nt - 2 - ii[:-1]) * nph + anti_j[:-1]).ravel()
    rn_anti = off_rs + (np.arange(nph) + nt) % nph
    rs_anti = off_rn + (np.arange(nph) + nt) % nph
    anti = np.concatenate([h_anti, v_anti, rn_anti, rs_anti])
    offsets = (off_v, off_rn, off_rs)
    return a, b, ta, tb, pa, pb, anti, offsets


def _cell_edges(grid: LatLonGrid, offsets):
    nt, nph = grid.n_theta, grid.n_phi
    off_v, off_rn, _ = offsets
    ii, jj = np.meshgrid(np.arange(nt - 1), np.arange(nph), indexing="ij")
    jn = (jj + 1) % nph
    e0 = ii * nph + jj  # top    c0-c1
    e1 = off_v + ii * nph + jn  # right  c1-c2
    e2 = (ii + 1) * nph + jj  # bottom c3-c2
    e3 = off_v + ii * nph + jj  # left   c0-c3
    c0 = ii * nph + jj
    c1 = ii * nph + jn
    c2 = (ii + 1) * nph + jn
    c3 = (ii + 1) * nph + jj
    quads = dict(
        edges=np.stack([e0, e1, e2, e3], axis=-1).reshape(-1, 4),
        corners=np.stack([c0, c1, c2, c3], axis=-1).reshape(-1, 4),
        centers=np.stack(
            [(grid.thetas[ii] + grid.thetas[ii + 1]) / 2, grid.phis[jj] + np.pi / nph], axis=-1
        ).reshape(-1, 2),
    )
    j = np.arange(nph)
    jn1 = (j + 1) % nph
    _, off_rn, off_rs = offsets
    north_tri = np.stack([off_rn + j, j, off_rn + jn1], axis=-1)
    south_tri = np.stack([off_rs + j, (nt - 1) * nph + j, off_rs + jn1], axis=-1)
    return quads, np.concatenate([north_tri, south_tri])


def extract_nodal_s2(poly, n_theta: int | None = None) -> NodalExtract:
    """Marching squares on the latitude-longitude grid plus two polar fans.

    Saddle cells are resolved by the sign of f at the cell centre, and the
    grid values are symmetrised under x -> -x with parity (-1)^d so antipodal
    pairing is exact.
    """
    if int(getattr(poly, "n", 2)) != 2:
        raise ValueError("nodal extraction is implemented for S^2 only")
    d = _degree(poly)
    nt = n_theta or default_n_theta(d)
    grid = LatLonGrid(nt)
    nph = grid.n_phi
    vals, poles = _grid_values(poly, grid)
    parity = -1.0 if d % 2 else 1.0
    anti = vals[::-1, :][:, (np.arange(nph) + nt) % nph]
    vals = 0.5 * (vals + parity * anti)
    north = 0.5 * (poles[0] + parity * poles[1])
    poles = (north, parity * north)
    scale = max(np.max(np.abs(vals)), abs(north))
    if np.min(np.abs(vals)) <= DEGENERACY_RATIO * scale or abs(north) <= DEGENERACY_RATIO * scale:
        raise DegenerateSampleError("grid value below degeneracy threshold")

    node_vals = np.concatenate([vals.ravel(), np.array(poles)])
    sign = node_vals > 0
    ea, eb, ta, tb, pa, pb, anti_edge, offsets = _edge_tables(grid)
    crossed = sign[ea] != sign[eb]
    fa, fb = node_vals[ea], node_vals[eb]

    cross_ids = np.flatnonzero(crossed)
    edge_to_vertex = np.full(len(ea), -1)
    edge_to_vertex[cross_ids] = np.arange(len(cross_ids))
    tau = fa[cross_ids] / (fa[cross_ids] - fb[cross_ids])
    theta = ta[cross_ids] + tau * (tb[cross_ids] - ta[cross_ids])
    phi = pa[cross_ids] + tau * (pb[cross_ids] - pa[cross_ids])
    vertices = _sph(theta, phi)

    quads, tris = _cell_edges(grid, offsets)
    segs = []
    node_extra = []
    # quads
    q_cross = crossed[quads["edges"]]
    n_cross = q_cross.sum(axis=1)
    simple = n_cross == 2
    if np.any(simple):
        pair_edges = quads["edges"][simple][q_cross[simple]].reshape(-1, 2)
        segs.append(pair_edges)
    saddle = np.flatnonzero(n_cross == 4)
    if len(saddle):
        cen = quads["centers"][saddle]
        f_c = poly.evaluate(_sph(cen[:, 0], cen[:, 1]))
        corners = quads["corners"][saddle]
        edges = quads["edges"][saddle]
        c0_pos = sign[corners[:, 0]]
        join02 = (f_c > 0) == c0_pos
        # c0/c2 joined: cut off c1 (e0,e1) and c3 (e2,e3); else cut c0 (e3,e0) and c2 (e1,e2)
        s1 = np.where(join02[:, None], edges[:, [0, 1]], edges[:, [3, 0]])
        s2 = np.where(join02[:, None], edges[:, [2, 3]], edges[:, [1, 2]])
        segs.extend([s1, s2])
        diag = np.where(join02[:, None], corners[:, [0, 2]], corners[:, [1, 3]])
        node_extra.append(diag)
    t_cross = crossed[tris]
    t_n = t_cross.sum(axis=1)
    if np.any(t_n == 2):
        segs.append(tris[t_n == 2][t_cross[t_n == 2]].reshape(-1, 2))
    seg_edges = np.concatenate(segs) if segs else np.empty((0, 2), dtype=int)
    segments = edge_to_vertex[seg_edges]

    nv = len(vertices)
    degree = np.bincount(segments.ravel(), minlength=nv)
    if nv and (degree.min() != 2 or degree.max() != 2):
        raise TopologyError("crossing vertex without exactly two incident segments")
    if nv:
        adj = coo_matrix((np.ones(len(segments)), (segments[:, 0], segments[:, 1])), shape=(nv, nv))
        n_curves, labels = connected_components(adj, directed=False)
    else:
        n_curves, labels = 0, np.empty(0, dtype=int)
    p, q = vertices[segments[:, 0]], vertices[segments[:, 1]]
    chord = np.linalg.norm(p - q, axis=1)
    arcs = 2 * np.arcsin(np.clip(chord / 2, 0, 1))
    lengths = np.bincount(labels[segments[:, 0]], weights=arcs, minlength=n_curves) if nv else np.empty(0)

    same = ~crossed
    conn = np.stack([ea[same], eb[same]], axis=1)
    if node_extra:
        conn = np.concatenate([conn] + node_extra)
    return NodalExtract(
        grid=grid,
        degree=d,
        values=vals,
        pole_values=(float(poles[0]), float(poles[1])),
        node_edges=conn,
        node_edge_same=np.ones(len(conn), dtype=bool),
        vertex_edge=cross_ids,
        vertices=vertices,
        segments=segments,
        curve_labels=labels,
        n_curves=int(n_curves),
        lengths=lengths,
        antipodal_edge=anti_edge,
        edge_to_vertex=edge_to_vertex,
    )
