"""Named test functions with fixed ids, evaluated as exact cell averages.

Every builtin is a callable ``(d, m, seed=0, **params) -> GridFunction``.  The
ids are stable so that configuration files and acceptance scripts can refer to
them by name.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from .grid import GridFunction, project_monomial

__all__ = ["BUILTINS", "make", "CONTINUOUS", "witness_basis", "trig_average"]


def _edges(m: int) -> tuple[np.ndarray, np.ndarray]:
    e = np.linspace(0.0, 1.0, (1 << m) + 1)
    return e[:-1], e[1:]


def _axis(arr: np.ndarray, axis: int, d: int) -> np.ndarray:
    shape = [1] * d
    shape[axis] = arr.size
    return arr.reshape(shape)


def trig_average(m: int, freq: float) -> np.ndarray:
    """Exact cell averages of ``exp(2 pi i freq x)`` on the resolution-``m`` grid."""
    a, b = _edges(m)
    if freq == 0:
        return np.ones(a.size, dtype=complex)
    w = 2 * math.pi * freq
    return (np.exp(1j * w * b) - np.exp(1j * w * a)) / (1j * w * (b - a))


def const(d: int, m: int, seed: int = 0, c: float = 1.0) -> GridFunction:
    return GridFunction.constant(d, m, c)


def linear(d: int, m: int, seed: int = 0) -> GridFunction:
    """``x_1``."""
    return project_monomial(d, m, (1,) + (0,) * (d - 1))


def monomial(d: int, m: int, seed: int = 0, alpha=None) -> GridFunction:
    """``x^alpha`` (default ``x_1^2``)."""
    alpha = tuple(alpha) if alpha is not None else (2,) + (0,) * (d - 1)
    return project_monomial(d, m, alpha)


def sine(d: int, m: int, seed: int = 0) -> GridFunction:
    """Tensor sine ``prod_i sin(2 pi x_i)``."""
    s = trig_average(m, 1.0).imag
    out = np.ones(())
    for axis in range(d):
        out = out * _axis(s, axis, d)
    return GridFunction(np.broadcast_to(out, (1 << m,) * d))


def step(d: int, m: int, seed: int = 0, at: float = 1.0 / 3.0) -> GridFunction:
    """Indicator of ``x_1 >= at``; the cell holding the jump gets its exact average."""
    a, b = _edges(m)
    frac = np.clip((b - at) / (b - a), 0.0, 1.0)
    out = _axis(frac, 0, d)
    return GridFunction(np.broadcast_to(out, (1 << m,) * d))


def checkerboard(d: int, m: int, seed: int = 0, level: int = 2) -> GridFunction:
    """``+-1`` alternating on the dyadic cubes of one level."""
    level = min(level, m)
    idx = np.arange(1 << m) >> (m - level)
    total = sum(_axis(idx, axis, d) for axis in range(d))
    return GridFunction(np.broadcast_to(np.where(total % 2 == 0, 1.0, -1.0), (1 << m,) * d))


def smooth(d: int, m: int, seed: int = 0, terms: int = 6, max_freq: int = 3) -> GridFunction:
    """Seeded Fourier sum with amplitudes decaying like ``|xi|^-2``."""
    rng = np.random.default_rng(seed)
    out = np.zeros((1 << m,) * d)
    for _ in range(terms):
        xi = rng.integers(-max_freq, max_freq + 1, size=d)
        amp = rng.normal() / (1.0 + float(np.dot(xi, xi)))
        phase = rng.uniform(0, 2 * math.pi)
        z = np.exp(1j * phase) * np.ones(())
        for axis in range(d):
            z = z * _axis(trig_average(m, float(xi[axis])), axis, d)
        out = out + amp * np.broadcast_to(z.real, out.shape)
    return GridFunction(out)


BUILTINS: dict[str, Callable[..., GridFunction]] = {
    "const": const,
    "linear": linear,
    "monomial": monomial,
    "sine": sine,
    "step": step,
    "checkerboard": checkerboard,
    "smooth": smooth,
}

CONTINUOUS = ("const", "linear", "monomial", "sine", "smooth")


def make(name: str, d: int, m: int, seed: int = 0, **params) -> GridFunction:
    try:
        fn = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None
    return fn(d, m, seed, **params)


def witness_basis(d: int, m: int, size: int = 32) -> list[GridFunction]:
    """Fixed smooth witnesses: tensor cosines ``prod cos(pi j_i x_i)`` then monomials."""
    out = []
    half = {}
    for j in range(size + 1):
        half[j] = trig_average(m, j / 2.0).real
    for total in itertools.count(1):
        for js in itertools.product(range(total + 1), repeat=d):
            if sum(js) != total:
                continue
            f = np.ones(())
            for axis, j in enumerate(js):
                f = f * _axis(half[j], axis, d)
            out.append(GridFunction(np.broadcast_to(f, (1 << m,) * d)))
            if len(out) == size - size // 4:
                break
        if len(out) == size - size // 4:
            break
    for total in itertools.count(1):
        for alpha in itertools.product(range(total + 1), repeat=d):
            if sum(alpha) == total and len(out) < size:
                out.append(project_monomial(d, m, alpha))
        if len(out) == size:
            return out
