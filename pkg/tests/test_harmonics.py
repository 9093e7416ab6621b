import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_lab import harmonics as hm
from nodal_lab.specfun import sphere_volume


def _gram(basis, n, l):
    pts, wts = hm.sphere_quadrature(n, 2 * l)
    g = np.zeros((len(basis), len(basis)))
    for s in range(0, len(pts), 20000):
        b = basis.evaluate(pts[s : s + 20000])
        g += (b * wts[s : s + 20000, None]).T @ b
    return g


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_dimension_telescoping(n):
    for l in range(0, 31):
        if n == 1:
            assert hm.dim_harmonics(1, l) == (1 if l == 0 else 2)
        else:
            assert hm.dim_harmonics(n, l) == sum(hm.dim_harmonics(n - 1, m) for m in range(l + 1))
        # harmonics of degree l and l-2, l-4, ... fill the degree-l homogeneous polynomials
        assert sum(hm.dim_harmonics(n, k) for k in range(l % 2, l + 1, 2)) == math.comb(l + n, n)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_size_matches_dimension(n):
    for l in (0, 1, 5, 17):
        assert len(hm.build_basis(n, l)) == hm.dim_harmonics(n, l)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_addition_theorem(n):
    rng = np.random.default_rng(n)
    pts = hm.random_sphere_points(n, 25, rng)
    for l in range(0, 31):
        vals = hm.build_basis(n, l).evaluate(pts)
        target = hm.dim_harmonics(n, l) / sphere_volume(n)
        assert np.max(np.abs(np.sum(vals**2, axis=1) - target)) < 1e-8


@pytest.mark.parametrize("n, l", [(1, 0), (1, 7), (2, 0), (2, 5), (2, 20), (3, 3), (3, 12)])
def test_quadrature_orthonormality(n, l):
    g = _gram(hm.build_basis(n, l), n, l)
    assert np.max(np.abs(g - np.eye(len(g)))) < 1e-7


def test_distinct_degrees_orthogonal():
    win = hm.build_window(2, 6, 0.0)
    pts, wts = hm.sphere_quadrature(2, 12)
    b = win.evaluate(pts)
    assert np.max(np.abs((b * wts[:, None]).T @ b - np.eye(win.dimension))) < 1e-10


def test_zonal_value_at_pole():
    for n in (2, 3, 4):
        for l in (0, 3, 10):
            assert hm.zonal(n, l, 0.0) == pytest.approx(math.sqrt(hm.dim_harmonics(n, l) / sphere_volume(n)), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), l=st.integers(0, 12), n=st.sampled_from([2, 3]))
def test_kernel_is_zonal(seed, l, n):
    rng = np.random.default_rng(seed)
    x, y = (hm.SpherePoint.normalized(v) for v in rng.standard_normal((2, n + 1)))
    basis = hm.build_basis(n, l)
    k = hm.reproducing_kernel(basis, x, y)
    theta = math.acos(np.clip(x.coords @ y.coords, -1, 1))
    # Z_l(x, y) = Y_zonal(pole) * Y_zonal(theta)
    expected = hm.zonal(n, l, 0.0) * hm.zonal(n, l, theta)
    assert k == pytest.approx(float(expected), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), l=st.integers(1, 10))
def test_kernel_rotation_invariant(seed, l):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    x, y = (hm.SpherePoint.normalized(v) for v in rng.standard_normal((2, 3)))
    basis = hm.build_basis(2, l)
    a = hm.reproducing_kernel(basis, x, y)
    b = hm.reproducing_kernel(basis, hm.SpherePoint.normalized(q @ x.coords), hm.SpherePoint.normalized(q @ y.coords))
    assert a == pytest.approx(b, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_angles_round_trip(seed, n):
    v = np.random.default_rng(seed).standard_normal(n + 1)
    p = hm.SpherePoint.normalized(v)
    q = hm.SpherePoint.from_angles(p.angles())
    assert np.allclose(p.coords, q.coords, atol=1e-12)


def test_sphere_point_validation():
    with pytest.raises(ValueError):
        hm.SpherePoint(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        hm.SpherePoint(np.array([1.0]))


def test_window_degrees():
    assert hm.window_degrees(8, 0.0) == [0, 2, 4, 6, 8]
    assert hm.window_degrees(9, 0.0) == [1, 3, 5, 7, 9]
    assert hm.window_degrees(8, 0.5) == [4, 6, 8]
    assert hm.window_degrees(8, 1.0) == [8]
    assert hm.window_degrees(9, 0.5) == [5, 7, 9]
    with pytest.raises(ValueError):
        hm.window_degrees(8, 1.5)


def test_window_grid_matches_direct():
    rng = np.random.default_rng(3)
    win = hm.build_window(2, 9, 0.0)
    c = rng.standard_normal(win.dimension)
    grid = hm.LatLonGrid(12)
    fast = hm.evaluate_window_grid(win, c, grid)
    slow = (win.evaluate(grid.points().reshape(-1, 3)) @ c).reshape(grid.n_theta, grid.n_phi)
    assert np.allclose(fast, slow, atol=1e-12)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        hm.build_basis(3, hm.MAX_DEGREE[3] + 1)
    with pytest.raises(ValueError):
        hm.build_basis(5, 2)

