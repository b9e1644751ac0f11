"""Smoothing and approximation operators on grid functions.

``mollify`` implements the dilation-then-convolution sequence

    f_n(x) = integral f0(a_n(x) - r y) phi(y) dy,    a_n(x) = c + lambda_n (x - c),

with ``lambda_n = n/(n+1)``, ``c`` the centre of the unit cube, ``f0`` the zero
extension of ``f``, ``phi`` a tensor-product bump of unit mass and
``r = 1/(2(n+1))`` by default, the distance from ``a_n(Q)`` to the boundary.  Each output
cell holds the average of ``f_n`` over a supersample lattice; the inner
integral over each input cell is exact up to the tabulated bump CDF.

``jackson_approx`` is a tensor-product piecewise-linear interpolant whose error
is bounded by the first-order modulus of continuity.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .grid import GridFunction, _norm_of_block, lq_norm, pair
from .params import INF, Kappa, ext_real
from .polyapprox import _half_space_shifts, finite_difference
from .variation import LocalTerms, v_seminorm

__all__ = [
    "MollifierConfig",
    "bump",
    "bump_cdf",
    "mollify",
    "mollify_axis_matrix",
    "quadrature_error",
    "mollifier_bound_check",
    "ConvergenceStudy",
    "convergence_study",
    "modulus",
    "jackson_matrix",
    "jackson_approx",
    "BOUND_SLACK",
]

BOUND_SLACK = 0.05
_CDF_POINTS = 1 << 15


def _profile(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@functools.lru_cache(maxsize=None)
def _mass() -> float:
    return quad(lambda t: math.exp(-1.0 / (1.0 - t * t)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)[0]


def bump(t) -> np.ndarray:
    """One-dimensional factor ``C exp(-1/(1-t^2))`` of the kernel, unit mass on ``[-1, 1]``."""
    return _profile(t) / _mass()


@functools.lru_cache(maxsize=None)
def _cdf_table() -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(-1.0, 1.0, _CDF_POINTS + 1)
    cdf = cumulative_trapezoid(bump(t), t, initial=0.0)
    # the trapezoid total agrees with quad to ~1e-12; pin the endpoint
    cdf /= cdf[-1]
    t.setflags(write=False)
    cdf.setflags(write=False)
    return t, cdf


def bump_cdf(x) -> np.ndarray:
    t, cdf = _cdf_table()
    return np.interp(x, t, cdf, left=0.0, right=1.0)


@dataclass(frozen=True)
class MollifierConfig:
    """Parameters of the mollifier sequence.

    Attributes
    ----------
    n : int
        Sequence index; ``lambda_n = n / (n + 1)``.
    supersample : int
        Sample points per output cell and axis (at least 2).
    bump : str
        Kernel id; only ``"tensor-exp"`` exists.
    radius_scale : float
        Kernel radius is ``radius_scale / (n + 1)``.  ``a_n`` leaves a margin
        of ``1 / (2 (n + 1))`` around its image, so the default ``0.5`` keeps
        every shifted sample inside the unit cube and the zero extension is
        never read.  ``1.0`` is the literal kernel scaling, under which
        boundary cells mix in zeros and the variation bound can fail.
    """

    n: int
    supersample: int = 4
    bump: str = "tensor-exp"
    radius_scale: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.supersample < 2:
            raise ValueError("supersample must be at least 2")
        if self.bump != "tensor-exp":
            raise ValueError(f"unknown bump {self.bump!r}")
        if self.radius_scale <= 0:
            raise ValueError("radius_scale must be positive")

    @property
    def dilation(self) -> float:
        return self.n / (self.n + 1.0)

    @property
    def radius(self) -> float:
        return self.radius_scale / (self.n + 1.0)


@functools.lru_cache(maxsize=64)
def mollify_axis_matrix(N: int, n: int, supersample: int, radius_scale: float) -> np.ndarray:
    """``M[i, j]``: weight of input cell ``j`` in output cell ``i`` along one axis."""
    cfg = MollifierConfig(n, supersample, radius_scale=radius_scale)
    S = supersample
    x = (np.arange(N)[:, None] + (np.arange(S)[None, :] + 0.5) / S) / N
    z = cfg.dilation * (x - 0.5) + 0.5
    edges = np.arange(N + 1) / N
    cdf = bump_cdf((z[..., None] - edges) / cfg.radius)
    w = cdf[..., :-1] - cdf[..., 1:]
    out = w.mean(axis=1)
    out.setflags(write=False)
    return out


def _apply_axis(arr: np.ndarray, M: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(M, arr, axes=([1], [axis])), 0, axis)


def mollify(f: GridFunction, cfg: MollifierConfig | int) -> GridFunction:
    """The mollified function ``f_n`` at the resolution of ``f``."""
    if not isinstance(cfg, MollifierConfig):
        cfg = MollifierConfig(int(cfg))
    M = mollify_axis_matrix(f.n, cfg.n, cfg.supersample, cfg.radius_scale)
    arr = f.values
    for axis in range(f.d):
        arr = _apply_axis(arr, M, axis)
    return GridFunction(arr)


def quadrature_error(f: GridFunction, cfg: MollifierConfig) -> float:
    """Sup-norm change when the supersample lattice is doubled."""
    fine = MollifierConfig(cfg.n, 2 * cfg.supersample, cfg.bump, cfg.radius_scale)
    return lq_norm(mollify(f, cfg) - mollify(f, fine), INF)


def _factor(kappa: Kappa, n: int) -> float:
    lam_n = n / (n + 1.0)
    inv_q = 0.0 if kappa.q is INF else 1.0 / float(kappa.q)
    return lam_n ** (kappa.d * (kappa.lam_float - inv_q))


def mollifier_bound_check(f: GridFunction, kappa: Kappa, n: int, max_level: Optional[int] = None,
                          cfg: Optional[MollifierConfig] = None, slack: float = BOUND_SLACK,
                          terms: Optional[LocalTerms] = None) -> tuple[float, float, bool]:
    """``|f_n|_V <= lambda_n^(d(lambda - 1/q)) |f|_V`` up to a relative slack."""
    cfg = cfg or MollifierConfig(n)
    if cfg.n != n:
        raise ValueError("cfg.n disagrees with n")
    fn = mollify(f, cfg)
    lhs = v_seminorm(fn, kappa, max_level).value
    base = v_seminorm(f, kappa, max_level, terms).value
    rhs = _factor(kappa, n) * base
    scale = max(1.0, lq_norm(f, INF))
    return lhs, rhs, bool(lhs <= rhs * (1 + slack) + 1e-12 * scale)


@dataclass
class ConvergenceStudy:
    """Rows ``(n, err, seminorm)``; ``err`` is ``||f - f_n||_q`` or, for ``q = inf``,
    the largest pairing ``|integral (f - f_n) g|`` over the witnesses."""

    kappa: Kappa
    seminorm: float
    rows: list = field(default_factory=list)
    error_kind: str = "norm"

    def errors(self) -> list[float]:
        return [r[1] for r in self.rows]

    def seminorm_gaps(self) -> list[float]:
        return [abs(r[2] - self.seminorm) for r in self.rows]

    def error_ratio(self) -> float:
        """First error over last error."""
        e = self.errors()
        return e[0] / e[-1] if e[-1] > 0 else math.inf

    def slope(self) -> float:
        """Least-squares slope of ``log err`` against ``log n``."""
        n = np.array([r[0] for r in self.rows], dtype=float)
        e = np.array(self.errors())
        keep = e > 0
        if keep.sum() < 2:
            return math.nan
        return float(np.polyfit(np.log(n[keep]), np.log(e[keep]), 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "err_pairing" if self.error_kind == "pairing" else "err_q", "seminorm"])
        for n, err, v in self.rows:
            w.writerow([n, repr(float(err)), repr(float(v))])
        return buf.getvalue()


def convergence_study(f: GridFunction, kappa: Kappa, n_list: Sequence[int],
                      witnesses: Optional[Sequence[GridFunction]] = None,
                      max_level: Optional[int] = None, supersample: int = 4,
                      radius_scale: float = 0.5) -> ConvergenceStudy:
    """Tabulate ``||f - f_n||_q`` and ``|f_n|_V`` along the mollifier sequence."""
    q = ext_real(kappa.q)
    kind = "pairing" if q is INF else "norm"
    if kind == "pairing" and not witnesses:
        from .builtins import witness_basis

        witnesses = witness_basis(f.d, f.m)
    study = ConvergenceStudy(kappa, v_seminorm(f, kappa, max_level).value, error_kind=kind)
    for n in n_list:
        fn = mollify(f, MollifierConfig(int(n), supersample, radius_scale=radius_scale))
        diff = f - fn
        if kind == "norm":
            err = lq_norm(diff, q)
        else:
            err = max(abs(pair(diff, g)) for g in witnesses)
        study.rows.append((int(n), err, v_seminorm(fn, kappa, max_level).value))
    return study


def modulus(f: GridFunction, k: int, q, t: float) -> float:
    """``omega_kq(f; t)``: largest ``||Delta_h^k f||_q`` over lattice shifts with ``|h|_inf <= t``.

    Each difference is measured on the cells ``x`` with ``x + k h`` still in
    the unit cube.
    """
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    q = ext_real(q)
    limit = int(math.floor(t * f.n + 1e-9))
    best = 0.0
    for h in _half_space_shifts(f.d, limit + 1):
        diff = finite_difference(f.values, h, k)
        if diff.size:
            best = max(best, _norm_of_block(diff, q, f.cell_volume))
    return best


@functools.lru_cache(maxsize=64)
def jackson_matrix(N: int, n: int) -> np.ndarray:
    """Piecewise-linear interpolation through cell centres spaced ``floor(N/n)`` cells apart."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    s = max(1, N // n)
    nodes = list(range(0, N, s))
    if nodes[-1] != N - 1:
        nodes.append(N - 1)
    T = np.zeros((N, N))
    if len(nodes) == 1:
        T[:, 0] = 1.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        for i in range(a, b + 1):
            w = (i - a) / (b - a)
            T[i, :] = 0.0
            T[i, a] += 1.0 - w
            T[i, b] += w
    T.setflags(write=False)
    return T


def jackson_approx(f: GridFunction, n: int, order: Optional[Sequence[int]] = None) -> GridFunction:
    """Tensor-product interpolation operator; ``order`` permutes the axes it is applied along."""
    T = jackson_matrix(f.n, n)
    order = range(f.d) if order is None else order
    if sorted(order) != list(range(f.d)):
        raise ValueError("order must be a permutation of the axes")
    arr = f.values
    for axis in order:
        arr = _apply_axis(arr, T, axis)
    return GridFunction(arr)
