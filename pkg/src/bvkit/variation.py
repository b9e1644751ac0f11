"""Packing functionals and the variation seminorm as an exact dyadic supremum.

For ``f``, a packing ``pi`` and ``kappa = {k, d, lambda, p, q}``::

    gamma(pi; f) = ( sum_{Q in pi} (|Q|^-lambda E_kq(f; Q))^p )^(1/p)

The seminorm is the supremum of ``gamma`` over dyadic packings whose cubes
have level ``<= max_level``.  It is computed by a post-order reduction of the
cube tree; :func:`gamma` evaluates a given packing with the *same* tree-shaped
summation, so the supremum reported by the DP coincides bit-for-bit with the
best value found by exhaustive enumeration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dyadic import DyadicCube, Packing, packing_membership
from .grid import GridFunction
from .params import INF, Kappa, as_float, classify, ext_real
from .polyapprox import level_blocks, level_errors

__all__ = [
    "NormReport",
    "LocalTerms",
    "gamma",
    "gamma_many",
    "v_seminorm",
    "v_seminorm_restricted",
    "little_v_profile",
    "Profile",
    "var_1d",
    "interval_packing_sup",
    "bmo_seminorm",
    "bmo_gamma",
    "morrey_norm",
    "bvk_seminorm",
]


@dataclass
class NormReport:
    """A computed value together with the object certifying it."""

    value: float
    certificate: object = None
    meta: dict = field(default_factory=dict)

    def certificate_json(self):
        cert = self.certificate
        if cert is None:
            return None
        if isinstance(cert, Packing):
            return [c.to_json() for c in cert]
        if hasattr(cert, "to_dict"):
            return cert.to_dict()
        return str(cert)

    def to_dict(self) -> dict:
        return {"value": self.value, "certificate": self.certificate_json(), "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)


def _p_info(p) -> tuple[bool, float]:
    p = ext_real(p)
    return (p is INF), (math.inf if p is INF else float(p))


def _root(x: float, p: float) -> float:
    if p == 1.0:
        return float(x)
    return math.pow(x, 1.0 / p)


def _root_array(x: np.ndarray, p: float) -> np.ndarray:
    if p == 1.0:
        return np.asarray(x, dtype=float)
    e = 1.0 / p
    return np.array([math.pow(v, e) for v in np.asarray(x, dtype=float).ravel()]).reshape(np.shape(x))


class LocalTerms:
    """Per-level tables of ``E_kq``, ``|Q|^-lambda E_kq`` and the ``p``-th powers.

    One instance is shared by :func:`gamma` and the DP so both read identical
    floating point values.
    """

    def __init__(self, f: GridFunction, kappa: Kappa):
        if kappa.d != f.d:
            raise ValueError(f"kappa has d={kappa.d} but the grid has d={f.d}")
        self.f = f
        self.kappa = kappa
        self.p_inf, self.p = _p_info(kappa.p)
        self._errors: dict[int, np.ndarray] = {}
        self._summands: dict[int, np.ndarray] = {}

    def errors(self, level: int) -> np.ndarray:
        if level not in self._errors:
            self._errors[level] = level_errors(self.f, level, self.kappa.k, self.kappa.q)
        return self._errors[level]

    def scaled(self, level: int) -> np.ndarray:
        factor = 2.0 ** (level * self.kappa.d * self.kappa.lam_float)
        return factor * self.errors(level)

    def summand(self, level: int) -> np.ndarray:
        """What the packing aggregate adds (finite ``p``) or maximises (``p = INF``)."""
        if level not in self._summands:
            t = self.scaled(level)
            self._summands[level] = t if (self.p_inf or self.p == 1.0) else t**self.p
        return self._summands[level]


def _child_views(arr: np.ndarray, d: int, batch: int):
    """The 2^d strided child views of a level array, in ``DyadicCube.children`` order."""
    lead = (slice(None),) * batch
    for offs in np.ndindex(*(2,) * d):
        yield arr[lead + tuple(slice(o, None, 2) for o in offs)]


def _fold_children(arr: np.ndarray, d: int, use_max: bool, batch: int = 0) -> np.ndarray:
    acc = None
    for view in _child_views(arr, d, batch):
        if acc is None:
            acc = view.copy()
        elif use_max:
            acc = np.maximum(acc, view)
        else:
            acc = acc + view
    return acc


def _tree_dp(tables: Sequence[np.ndarray], d: int, use_max: bool, min_level: int = 0):
    """Best antichain aggregate over the tree described by per-level tables.

    Returns the root aggregate (before the ``1/p`` root) and the argmax packing.
    Cubes above ``min_level`` may not be selected but still combine children.
    """
    L = len(tables) - 1
    best = [None] * (L + 1)
    chosen = [None] * (L + 1)
    for level in range(L, -1, -1):
        v = tables[level]
        enabled = level >= min_level
        if level == L:
            folded = np.zeros_like(v)
        else:
            folded = _fold_children(best[level + 1], d, use_max)
        if enabled:
            sel = (v >= folded) & (v > 0)
        else:
            sel = np.zeros(v.shape, dtype=bool)
        chosen[level] = sel
        best[level] = np.where(sel, v, folded)

    cubes = []

    def backtrack(cube: DyadicCube):
        if chosen[cube.level][cube.index]:
            cubes.append(cube)
        elif cube.level < L and best[cube.level][cube.index] > 0:
            for c in cube.children():
                backtrack(c)

    backtrack(DyadicCube.root(d))
    return float(best[0][(0,) * d]), Packing._trusted(tuple(cubes))


def _fold_packings(tables: Sequence[np.ndarray], masks: Sequence[np.ndarray], d: int,
                   use_max: bool) -> np.ndarray:
    """Tree-shaped aggregate of each packing (rows of ``masks``)."""
    L = len(tables) - 1
    acc = np.where(masks[L], tables[L], 0.0)
    for level in range(L - 1, -1, -1):
        folded = _fold_children(acc, d, use_max, batch=1)
        acc = np.where(masks[level], tables[level], folded)
    return acc.reshape(acc.shape[0])


def gamma_many(f: GridFunction, packings: Sequence[Packing], kappa: Kappa,
               max_level: Optional[int] = None, terms: Optional[LocalTerms] = None,
               masks: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """:func:`gamma` for many packings at once (vectorised over packings).

    ``masks`` may carry a precomputed :func:`~bvkit.dyadic.packing_membership`
    for the same packings and ``max_level``.
    """
    if max_level is None:
        max_level = max((pi.max_level for pi in packings), default=0)
    if max_level > f.m:
        raise ValueError(f"packing cubes at level {max_level} are finer than the grid (m={f.m})")
    terms = terms or LocalTerms(f, kappa)
    tables = [terms.summand(level) for level in range(max_level + 1)]
    if masks is None:
        masks = packing_membership(packings, f.d, max_level)
    agg = _fold_packings(tables, masks, f.d, terms.p_inf)
    return agg if terms.p_inf else _root_array(agg, terms.p)


def gamma(f: GridFunction, pi: Packing, kappa: Kappa, terms: Optional[LocalTerms] = None) -> float:
    """The packing functional ``gamma(pi; f)``; the empty packing gives 0."""
    if len(pi) == 0:
        return 0.0
    return float(gamma_many(f, [pi], kappa, pi.max_level, terms)[0])


def _seminorm(f: GridFunction, kappa: Kappa, max_level: Optional[int], min_level: int,
              terms: Optional[LocalTerms]) -> NormReport:
    max_level = f.m if max_level is None else max_level
    if max_level > f.m:
        raise ValueError(f"max_level {max_level} exceeds the grid resolution {f.m}")
    terms = terms or LocalTerms(f, kappa)
    tables = [terms.summand(level) for level in range(max_level + 1)]
    agg, cert = _tree_dp(tables, f.d, terms.p_inf, min_level)
    value = agg if terms.p_inf else _root(agg, terms.p)
    meta = {"kappa": kappa.to_dict(), "m": f.m, "max_level": max_level,
            "regime": classify(kappa).to_dict()}
    if min_level:
        meta["min_level"] = min_level
    return NormReport(value=value, certificate=cert, meta=meta)


def v_seminorm(f: GridFunction, kappa: Kappa, max_level: Optional[int] = None,
               terms: Optional[LocalTerms] = None) -> NormReport:
    """Supremum of ``gamma`` over dyadic packings with cubes of level ``<= max_level``."""
    return _seminorm(f, kappa, max_level, 0, terms)


def _min_level_for(eps: float, d: int) -> int:
    if not 0 < eps:
        raise ValueError("eps must be positive")
    level = 0
    while 2.0 ** (-level * d) > eps:
        level += 1
    return level


def v_seminorm_restricted(f: GridFunction, kappa: Kappa, eps: float,
                          max_level: Optional[int] = None,
                          terms: Optional[LocalTerms] = None) -> NormReport:
    """Same supremum over packings of mesh ``<= eps`` (bigger cubes cannot be selected)."""
    max_level = f.m if max_level is None else max_level
    min_level = _min_level_for(eps, f.d)
    if min_level > max_level:
        return NormReport(0.0, Packing._trusted(()), {"kappa": kappa.to_dict(), "m": f.m,
                                                     "max_level": max_level, "eps": eps})
    report = _seminorm(f, kappa, max_level, min_level, terms)
    report.meta["eps"] = eps
    return report


@dataclass
class Profile:
    """Mesh-restricted suprema on a decreasing ladder and their log-log slope."""

    eps: list
    values: list
    slope: float

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.eps, self.values))


def little_v_profile(f: GridFunction, kappa: Kappa, levels: Sequence[int],
                     max_level: Optional[int] = None) -> Profile:
    """Restricted suprema at ``eps = 2^(-level*d)``; slope of ``log value`` vs ``log eps``."""
    terms = LocalTerms(f, kappa)
    eps_list, values = [], []
    for level in levels:
        eps = 2.0 ** (-level * f.d)
        eps_list.append(eps)
        values.append(v_seminorm_restricted(f, kappa, eps, max_level, terms).value)
    pos = [(e, v) for e, v in zip(eps_list, values) if v > 0]
    if len(pos) < 2:
        slope = math.nan
    else:
        x = np.log([e for e, _ in pos])
        y = np.log([v for _, v in pos])
        slope = float(np.polyfit(x, y, 1)[0])
    return Profile(eps_list, values, slope)


def _delta_k_row(v: np.ndarray, j: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``|Delta^k|`` over all sequences ending at centre ``j`` (gap divisible by k)."""
    gaps = np.arange(k, j + 1, k)
    if gaps.size == 0:
        return gaps, np.zeros(0)
    step = gaps // k
    total = np.zeros(gaps.size)
    for t in range(k + 1):
        total += (-1) ** (k - t) * math.comb(k, t) * v[j - gaps + t * step]
    return gaps, np.abs(total)


def var_1d(f: GridFunction, k: int = 1, lam: float = 0.0, p=1) -> float:
    """``(lambda, p)``-variation over increasing sequences of cell centres (d = 1).

    Longest-path DP over the DAG of centre pairs whose gap is a multiple of
    ``k``; edge weight ``(delta_k / gap^lambda)^p``.
    """
    if f.d != 1:
        raise ValueError("var_1d needs a one-dimensional grid function")
    p_inf, pf = _p_info(p)
    lam = float(lam)
    v = f.values
    n = v.size
    h = 1.0 / n
    if p_inf:
        best = 0.0
        for j in range(n):
            gaps, dk = _delta_k_row(v, j, k)
            if gaps.size:
                best = max(best, float(np.max(dk / (gaps * h) ** lam)))
        return best
    best = np.zeros(n)
    for j in range(n):
        gaps, dk = _delta_k_row(v, j, k)
        if gaps.size:
            w = (dk / (gaps * h) ** lam) ** pf
            best[j] = max(0.0, float(np.max(best[j - gaps] + w)))
    return _root(float(best.max()), pf)


def interval_packing_sup(f: GridFunction, lam: float = 0.0, p=1) -> float:
    """``sup_pi (sum_I (E_1(f;I)/|I|^lambda)^p)^(1/p)`` over closed intervals of centres.

    Intervals may share endpoints (disjoint interiors); ``E_1`` is half the
    oscillation of the centre values inside the interval (d = 1).
    """
    if f.d != 1:
        raise ValueError("interval_packing_sup needs a one-dimensional grid function")
    p_inf, pf = _p_info(p)
    lam = float(lam)
    v = f.values
    n = v.size
    h = 1.0 / n
    best = np.zeros(n)
    top = 0.0
    for j in range(1, n):
        rev = v[j::-1]
        e1 = 0.5 * (np.maximum.accumulate(rev) - np.minimum.accumulate(rev))[1:]
        gaps = np.arange(1, j + 1)
        t = e1 / (gaps * h) ** lam
        if p_inf:
            top = max(top, float(t.max()))
            continue
        cand = best[j - gaps] + t**pf
        best[j] = max(best[j - 1], float(cand.max()))
    return top if p_inf else _root(float(best[-1]), pf)


def _bmo_tables(f: GridFunction, p_inf: bool, pf: float, max_level: int) -> list[np.ndarray]:
    tables = []
    for level in range(max_level + 1):
        rows = level_blocks(f.values, level)
        mad = np.abs(rows - rows.mean(axis=1, keepdims=True)).mean(axis=1)
        mad = mad.reshape((1 << level,) * f.d)
        if p_inf:
            tables.append(mad)
        else:
            tables.append(2.0 ** (-level * f.d) * mad**pf)
    return tables


def bmo_seminorm(f: GridFunction, p=INF, max_level: Optional[int] = None) -> NormReport:
    """``sup_pi (sum_Q |Q| (mean_Q |f - f_Q|)^p)^(1/p)`` over dyadic packings."""
    max_level = f.m if max_level is None else max_level
    p_inf, pf = _p_info(p)
    tables = _bmo_tables(f, p_inf, pf, max_level)
    agg, cert = _tree_dp(tables, f.d, p_inf)
    value = agg if p_inf else _root(agg, pf)
    return NormReport(value, cert, {"p": str(ext_real(p)), "m": f.m, "max_level": max_level})


def bmo_gamma(f: GridFunction, pi: Packing, p=INF) -> float:
    """The BMO packing functional for one packing."""
    if len(pi) == 0:
        return 0.0
    p_inf, pf = _p_info(p)
    tables = _bmo_tables(f, p_inf, pf, pi.max_level)
    masks = packing_membership([pi], f.d, pi.max_level)
    agg = float(_fold_packings(tables, masks, f.d, p_inf)[0])
    return agg if p_inf else _root(agg, pf)


def morrey_norm(f: GridFunction, q: float, s: float, max_level: Optional[int] = None) -> NormReport:
    """``sup_Q |Q|^(s/d) (mean_Q |f|^q)^(1/q)`` over dyadic cubes."""
    q = ext_real(q)
    if q is INF or q < 1:
        raise ValueError("the Morrey exponent q must be finite and >= 1")
    qf = float(q)
    s = float(s)
    if not 0 < s < f.d / qf:
        raise ValueError(f"need 0 < s < d/q = {f.d / qf}, got s={s}")
    max_level = f.m if max_level is None else max_level
    best, arg = -1.0, None
    for level in range(max_level + 1):
        rows = level_blocks(np.abs(f.values), level)
        vals = 2.0 ** (-level * s) * np.mean(rows**qf, axis=1) ** (1.0 / qf)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best = float(vals[i])
            arg = DyadicCube(level, np.unravel_index(i, (1 << level,) * f.d))
    return NormReport(best, Packing._trusted((arg,)), {"q": qf, "s": s, "m": f.m,
                                                        "max_level": max_level})


def bvk_seminorm(f: GridFunction, k: int = 1) -> float:
    """Discrete surrogate ``sum_{|alpha|=k} sum_cells |Delta^alpha f| h^(d-k)``.

    A consistency diagnostic for smooth inputs, not an exact norm.
    """
    from .polyapprox import _exponents

    h = 2.0 ** -f.m
    if k >= f.n:
        raise ValueError("grid too coarse for k-th differences")
    total = 0.0
    for alpha in _exponents(f.d, k + 1):
        if sum(alpha) != k:
            continue
        arr = f.values
        for axis, order in enumerate(alpha):
            if order:
                arr = np.diff(arr, n=order, axis=axis)
        total += float(np.abs(arr).sum())
    return total * h ** (f.d - k)
