import functools

import numpy as np
import pytest

from bvkit import builtins
from bvkit.grid import lq_norm, sample
from bvkit.params import INF


@pytest.mark.parametrize("name", sorted(builtins.BUILTINS))
@pytest.mark.parametrize("d", [1, 2])
def test_shapes_and_determinism(name, d):
    f = builtins.make(name, d, 4, seed=7)
    assert f.d == d and f.m == 4
    assert f == builtins.make(name, d, 4, seed=7)


def test_unknown_builtin():
    with pytest.raises(ValueError):
        builtins.make("nope", 1, 3)


@pytest.mark.parametrize("d", [1, 2])
def test_exact_averages_match_supersampling(d):
    cases = [
        (builtins.sine(d, 5), lambda *x: functools.reduce(np.multiply, [np.sin(2 * np.pi * t) for t in x])),
        (builtins.linear(d, 5), lambda *x: x[0]),
        (builtins.step(d, 5), lambda *x: (x[0] >= 1 / 3).astype(float)),
    ]
    for f, fn in cases:
        ref = sample(fn, d, 5, supersample=96)
        assert lq_norm(f - ref, INF) < 2e-3


def test_smooth_seeds_differ():
    a, b = builtins.smooth(2, 4, 0), builtins.smooth(2, 4, 1)
    assert lq_norm(a - b, 2) > 1e-3


def test_checkerboard_values():
    f = builtins.checkerboard(1, 3, level=2)
    assert f.values.tolist() == [1, 1, -1, -1, 1, 1, -1, -1]


def test_witness_basis():
    for d in (1, 2):
        wit = builtins.witness_basis(d, 4)
        assert len(wit) == 32
        stack = np.array([w.values.ravel() for w in wit])
        assert np.linalg.matrix_rank(stack) >= min(24, stack.shape[1])
