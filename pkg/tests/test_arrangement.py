import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_lab import arrangement as arr
from nodal_lab.ensembles import make_spec, sample
from nodal_lab.harmonics import zonal
from nodal_lab.nodal_geometry import SphereFunction, extract_nodal_s2
from nodal_lab.rng import trial_rng
from oracles import TWO_TREE_EMPTY_OVALS, TWO_TREE_ENERGY


def _caps(specs):
    """prod_k ((x . e_k)^2 - cos(rho_k)^2): an oval of radius rho_k around +-e_k."""
    axes = np.array([a for a, _ in specs], dtype=float)
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    c2 = np.array([math.cos(r) ** 2 for _, r in specs])

    def f(p):
        return np.prod((p @ axes.T) ** 2 - c2, axis=1)

    return SphereFunction(f, 2 * len(specs))


def _forest_strategy():
    return st.integers(0, 25).flatmap(
        lambda k: st.tuples(*[st.integers(-1, i - 1) for i in range(k)]).map(list)
    )


def test_two_tree_energy():
    forest = arr.two_tree_forest()
    assert arr.energy(forest) == TWO_TREE_ENERGY
    assert arr.empty_ovals(forest) == TWO_TREE_EMPTY_OVALS
    assert forest.bracket() == "(((())()))((())())"


@pytest.mark.parametrize("k", list(range(1, 41)))
def test_nested_chain_energy(k):
    value = arr.energy(arr.nested_chain(k))
    assert isinstance(value, int)
    assert value == 2**k


@settings(max_examples=60, deadline=None)
@given(a=_forest_strategy(), b=_forest_strategy())
def test_energy_additive_over_trees(a, b):
    fa, fb = arr.NestingForest(list(a)), arr.NestingForest(list(b))
    shifted = [p if p < 0 else p + len(a) for p in b]
    both = arr.NestingForest(list(a) + shifted)
    assert arr.energy(both) == arr.energy(fa) + arr.energy(fb)
    assert arr.empty_ovals(both) == arr.empty_ovals(fa) + arr.empty_ovals(fb)


@settings(max_examples=60, deadline=None)
@given(parents=_forest_strategy())
def test_forest_round_trip_and_bounds(parents):
    f = arr.NestingForest(parents)
    g = arr.NestingForest.from_dict(f.to_dict())
    assert g.bracket() == f.bracket()
    assert arr.energy(g) == arr.energy(f)
    if f.size:
        # each oval contributes at least 2; a chain of length depth gives 2^depth
        assert arr.energy(f) >= 2 ** f.depth()
        assert arr.energy(f) >= 2 * arr.empty_ovals(f)


def test_forest_validation():
    with pytest.raises(ValueError):
        arr.NestingForest([1, 0])
    with pytest.raises(ValueError):
        arr.NestingForest([-1], seeds=[2, 2])


def test_reference_formulas():
    assert arr.milnor_total_betti(2, 4) == 8
    assert arr.harnack_bound(6) == 11
    assert arr.expected_euler_rp3(3) == 0
    for d in range(1, 30):
        # plane curves: 2g + 2 with g = (d-1)(d-2)/2
        assert arr.milnor_total_betti(2, d) == (d - 1) * (d - 2) + 2
        assert arr.harnack_bound(d) <= arr.milnor_total_betti(2, d)
    # smooth cubic surface in CP^3: 1 + 7 + 1
    assert arr.milnor_total_betti(3, 3) == 9
    b = arr.reference_bounds(2, 8)
    assert b.arnold_lower(20) == 20 - 3 * 2
    assert arr.reference_bounds(2, 7).arnold_lower(5) is None


def test_nested_caps():
    s = arr.analyze_s2(_caps([((0, 0, 1), 0.3), ((0, 0, 1), 0.6), ((1, 0, 0), 0.3)]), 96)
    assert s.b0_sphere == 6 and s.b0_projective == 3
    assert s.forest.bracket() == "(())()"
    assert s.energy == 6 and s.empty_ovals == 2 and s.depth == 2
    assert s.n_domains == 7


def test_disjoint_caps():
    s = arr.analyze_s2(_caps([((0, 0, 1), 0.3), ((1, 0, 0), 0.3), ((0, 1, 0), 0.3)]), 96)
    assert s.forest.bracket() == "()()()"
    assert s.energy == 6 and s.empty_ovals == 3


def test_zonal_even_degree_nests():
    f = SphereFunction(lambda p: zonal(2, 4, np.arccos(np.clip(p[:, 2], -1, 1))), 4)
    s = arr.analyze_s2(f, 96)
    assert (s.b0_sphere, s.b0_projective, s.one_sided) == (4, 2, 0)
    assert s.forest.bracket() == "(())"


def test_zonal_odd_degree_has_pseudo_line():
    f = SphereFunction(lambda p: zonal(2, 3, np.arccos(np.clip(p[:, 2], -1, 1))), 3)
    s = arr.analyze_s2(f, 96)
    assert (s.b0_sphere, s.b0_projective, s.one_sided) == (3, 2, 1)
    assert s.forest.bracket() == "()"


@pytest.mark.parametrize("d", [5, 6])
def test_random_curves_topology(d):
    spec = make_spec("rfs_window", 2, d)
    for t in range(6):
        p = sample(spec, trial_rng(40 + d, t))
        ext = extract_nodal_s2(p)
        lab = arr.label_domains(ext)
        pairing = arr.pair_components(ext)
        forest = arr.build_forest(lab, pairing, degree=d)
        assert ext.n_curves == lab.n_domains - 1
        assert forest.one_sided == d % 2
        assert ext.n_curves == 2 * forest.size + forest.one_sided
        assert pairing.b0_projective <= arr.harnack_bound(d)
        assert forest.depth() <= d // 2
        assert arr.count_components(ext) == (ext.n_curves, pairing.b0_projective)
        # domains alternate in sign across every curve
        a, b = lab.curve_domains.T
        assert np.all(lab.signs[a] != lab.signs[b])
