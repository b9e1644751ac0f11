import json

import numpy as np
import pytest

from bvkit.atoms import (Atom, Chain, DegenerateAtomError, Decomposition, MomentError, SearchConfig,
                         chain_norm, check_pairing_inequality, duality_gap, extremal_atom,
                         is_moment_free, make_atom, moments, u_norm_lower, u_norm_upper)
from bvkit.builtins import witness_basis
from bvkit.dyadic import DyadicCube, Packing
from bvkit.grid import GridFunction, lq_norm, pair, project_monomial
from bvkit.oracles import random_chain
from bvkit.params import INF, Kappa
from bvkit.polyapprox import PolyBasis, local_approx_error
from bvkit.variation import v_seminorm

K22 = Kappa(1, 1, 0, 2, 2)


def _rand(d, m, seed):
    return GridFunction(np.random.default_rng(seed).normal(size=(1 << m,) * d))


def _moment_free(d, m, k, seed):
    atom, scale = make_atom(_rand(d, m, seed), DyadicCube.root(d), Kappa(k, d, 0, 2, 2))
    return atom.values * scale


def test_chain_norm_examples():
    root = DyadicCube.root(1)
    atom = make_atom(GridFunction([1.0, -1.0]), root, K22)[0]
    assert chain_norm(Chain(Packing([root]), [atom], [3.0]), 2) == 3.0
    left, right = root.children()
    f = _rand(1, 3, 0)
    atoms = [make_atom(f, c, K22)[0] for c in (left, right)]
    assert chain_norm(Chain(Packing([left, right]), atoms, [3.0, 4.0]), 2) == pytest.approx(5.0)
    assert chain_norm(Chain(Packing([left, right]), atoms, [1.0, 1.0]), INF) == 1.0


def test_make_atom_examples():
    root = DyadicCube.root(1)
    with pytest.raises(DegenerateAtomError):
        make_atom(project_monomial(1, 3, (1,)), root, Kappa(2, 1, 0, 2, 2))
    atom, scale = make_atom(GridFunction([1.0, -1.0]), root, K22)
    assert np.allclose(atom.values.values, [1.0, -1.0], rtol=0, atol=1e-15)
    assert scale == pytest.approx(1.0, rel=1e-15)
    raw = GridFunction([0.0, 0.0, 2.0, -2.0])
    kap = Kappa(1, 1, 0.5, 2, 2)
    cube = DyadicCube(1, (1,))
    atom, scale = make_atom(raw, cube, kap)
    norm = lq_norm(raw, 2, cube)
    assert scale == pytest.approx(norm * cube.volume**0.5, rel=1e-14)
    assert np.allclose(atom.values.values, raw.values * cube.volume**-0.5 / norm)


@pytest.mark.parametrize("kap", [Kappa(1, 1, 0, 2, 2), Kappa(2, 2, 0.25, 1, INF), Kappa(3, 2, 0.5, 2, 1),
                                 Kappa(2, 1, 0.25, INF, 3)])
def test_atoms_are_valid_and_annihilate_polynomials(kap):
    rng = np.random.default_rng(1)
    for level in range(3):
        idx = tuple(rng.integers(0, 1 << level, size=kap.d))
        cube = DyadicCube(level, idx)
        for atom in (make_atom(_rand(kap.d, 4, level), cube, kap)[0],
                     extremal_atom(_rand(kap.d, 4, 10 + level), cube, kap)[0]):
            atom.validate(kap)
            for alpha in PolyBasis(kap.d, kap.k).exponents:
                assert abs(pair(project_monomial(kap.d, 4, alpha), atom.values)) <= 1e-9


def test_atom_validation_rejects():
    root = DyadicCube.root(1)
    with pytest.raises(ValueError):
        Atom(DyadicCube(1, (0,)), GridFunction([1.0, -1.0])).validate(K22)
    with pytest.raises(ValueError):
        Atom(root, GridFunction([2.0, -2.0])).validate(K22)
    with pytest.raises(MomentError):
        Atom(root, GridFunction([0.5, 0.1])).validate(K22)


@pytest.mark.parametrize("q", [1, 2, INF, 3, 1.5])
def test_extremal_atom_pairing(q):
    kap = Kappa(2, 1, 0.25, 2, q)
    f = _rand(1, 3, 4)
    cube = DyadicCube(1, (1,))
    atom, val = extremal_atom(f, cube, kap)
    want = cube.volume ** -0.25 * local_approx_error(f, cube, 2, q).error
    assert val == pytest.approx(want, rel=1e-7)


def test_extremal_atom_rejects_polynomial():
    with pytest.raises(DegenerateAtomError):
        extremal_atom(project_monomial(1, 3, (1,)), DyadicCube.root(1), Kappa(2, 1, 0, 2, INF))


def test_pairing_inequality_examples():
    kap = Kappa(2, 2, 0.25, 2, INF)
    rng = np.random.default_rng(2)
    b = random_chain(2, 4, kap, rng)
    lhs, _, ok = check_pairing_inequality(project_monomial(2, 4, (1, 0)), b, kap)
    assert lhs <= 1e-12 and ok
    f = _rand(2, 4, 3)
    cube = DyadicCube(1, (0, 1))
    atom, val = extremal_atom(f, cube, kap)
    lhs, rhs, ok = check_pairing_inequality(f, Chain(Packing([cube]), [atom], [-2.0]), kap)
    assert ok and lhs == pytest.approx(rhs, rel=1e-9) and lhs == pytest.approx(2 * val)


@pytest.mark.parametrize("kap", [Kappa(1, 1, 0, 1, 2), Kappa(2, 2, 0.25, INF, INF), Kappa(2, 1, 0, 2, INF)])
def test_pairing_inequality_random(kap):
    rng = np.random.default_rng(5)
    for _ in range(15):
        f = GridFunction(rng.normal(size=(16,) * kap.d))
        assert check_pairing_inequality(f, random_chain(kap.d, 4, kap, rng), kap)[2]


def test_moments_and_freeness():
    g = _moment_free(2, 3, 2, 0)
    assert is_moment_free(g, 2) and np.max(np.abs(moments(g, None, 2))) < 1e-12
    assert not is_moment_free(g + GridFunction.constant(2, 3), 1)


def test_upper_examples():
    kap = Kappa(1, 1, 0, 2, 2)
    atom, _ = make_atom(_rand(1, 3, 0), DyadicCube.root(1), kap)
    assert u_norm_upper(atom.values, kap).value <= 1 + 1e-9
    g = _moment_free(1, 3, 1, 1)
    g = g * (0.7 / lq_norm(g, 2))
    assert u_norm_upper(g, kap).value <= 0.7 + 1e-9
    with pytest.raises(MomentError):
        u_norm_upper(GridFunction.constant(1, 3), kap)


def test_upper_recovers_sibling_decomposition():
    kap = Kappa(1, 1, 0, 2, 2)
    left, right = DyadicCube.root(1).children()
    aL = make_atom(_rand(1, 4, 1), left, kap)[0]
    aR = make_atom(_rand(1, 4, 2), right, kap)[0]
    g = aL.values * 3.0 + aR.values * -4.0
    rep = u_norm_upper(g, kap)
    assert rep.value <= 5.0 + 1e-6
    dec = rep.certificate
    assert lq_norm(dec.synth(1, 4) - g, INF) <= 1e-9
    for b in dec.chains:
        for a in b.atoms:
            assert a.is_valid(kap)
    json.loads(dec.to_json())


def test_baseline_homogeneity():
    kap = Kappa(2, 2, 0.25, 2, INF)
    g = _moment_free(2, 3, 2, 4)
    base = SearchConfig(strategy="baseline")
    assert u_norm_upper(-2.5 * g, kap, base).value == pytest.approx(2.5 * u_norm_upper(g, kap, base).value,
                                                                  rel=1e-13)


def test_lower_examples():
    kap = Kappa(2, 1, 0, 2, 2)
    g = _moment_free(1, 3, 2, 5)
    assert u_norm_lower(g, kap, [GridFunction.constant(1, 3)]).value == 0.0
    fstar = _rand(1, 3, 6)
    atom, _ = extremal_atom(fstar, DyadicCube.root(1), kap)
    low = u_norm_lower(atom.values, kap, [fstar]).value
    want = local_approx_error(fstar, None, 2, 2).error / v_seminorm(fstar, kap).value
    assert low >= want * (1 - 1e-9)


def test_lower_below_upper():
    rng = np.random.default_rng(7)
    kap = Kappa(1, 1, 0, 2, 2)
    wit = witness_basis(1, 3)
    for i in range(20):
        g = _moment_free(1, 3, 1, 100 + i) * float(rng.uniform(0.1, 10))
        assert u_norm_lower(g, kap, wit).value <= u_norm_upper(g, kap).value + 1e-6


def test_duality_gap_examples():
    kap = Kappa(1, 1, 0, 2, 2)
    assert duality_gap(GridFunction.zeros(1, 2), kap) == (0.0, 0.0, 0.0)
    atom, _ = make_atom(_rand(1, 3, 8), DyadicCube.root(1), kap)
    lo, up, gap = duality_gap(atom.values, kap)
    assert up >= lo * (1 - 1e-6) and gap <= 0.05
    with pytest.raises(ValueError):
        duality_gap(atom.values, Kappa(1, 1, 0, 2, 1))


def test_exact_lower_is_a_true_dual_value():
    kap = Kappa(1, 1, 0, 2, 2)
    g = _moment_free(1, 2, 1, 9)
    rep = u_norm_lower(g, kap, exact=True)
    f = rep.certificate
    # the maximiser has unit seminorm and realises the reported value
    assert v_seminorm(f, kap).value == pytest.approx(1.0, rel=1e-9)
    assert pair(f, g) == pytest.approx(rep.value, rel=1e-9)
    with pytest.raises(ValueError):
        u_norm_lower(_moment_free(2, 4, 1, 0), Kappa(1, 2, 0, 2, 2), exact=True)


def test_decomposition_cost_and_synth():
    kap = Kappa(1, 1, 0, 1, 2)
    left, right = DyadicCube.root(1).children()
    aL = make_atom(_rand(1, 3, 1), left, kap)[0]
    aR = make_atom(_rand(1, 3, 2), right, kap)[0]
    dec = Decomposition([Chain(Packing([left]), [aL], [2.0]), Chain(Packing([right]), [aR], [-1.0])])
    assert dec.cost(kap) == 3.0
    assert np.allclose(dec.synth(1, 3).values, 2 * aL.values.values - aR.values.values)
