"""Atoms, chains and two-sided bounds for the atomic (predual) norm.

A kappa-atom on a dyadic cube ``Q`` is supported in ``Q``, has
``||a||_{q'} <= |Q|^-lambda`` and annihilates polynomials of degree
``<= k-1``.  A chain over a packing is a coefficient combination of atoms, one
per cube, and costs the ``l_{p'}`` norm of its coefficients.  The U-norm of
``g`` is the least total cost of chains summing to ``g``.

It is bracketed here: :func:`u_norm_upper` builds a decomposition (an upper
bound anyone can audit), :func:`u_norm_lower` pairs ``g`` against functions of
known variation (a lower bound).  For tiny grids the lower bound can be made
exact by a cutting-plane solve of the dual problem.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .dyadic import DyadicCube, Packing, count_packings, enumerate_packings, uniform_packing
from .grid import GridFunction, _norm_of_block, lq_norm, pair
from .params import INF, Kappa, classify, ext_real
from .polyapprox import _design, _fit_coefficients, _orthonormal, local_approx_error
from .variation import LocalTerms, NormReport, gamma, v_seminorm

__all__ = [
    "Atom",
    "Chain",
    "Decomposition",
    "DegenerateAtomError",
    "MomentError",
    "SearchConfig",
    "chain_norm",
    "make_atom",
    "extremal_atom",
    "moments",
    "is_moment_free",
    "u_norm_upper",
    "u_norm_lower",
    "duality_gap",
    "check_pairing_inequality",
]

NORM_RTOL = 1e-10
MOMENT_TOL = 1e-9
EXACT_MAX_CELLS = 64


class DegenerateAtomError(ValueError):
    """Nothing is left after removing the polynomial part."""


class MomentError(ValueError):
    """The function does not annihilate polynomials of degree ``<= k-1``."""


def _block_vector(f: GridFunction, cube: DyadicCube) -> np.ndarray:
    return np.array(f.block(cube), dtype=float).reshape(-1)


def _embed(values: np.ndarray, cube: DyadicCube, d: int, m: int) -> GridFunction:
    out = np.zeros((1 << m,) * d)
    n = 1 << (m - cube.level)
    out[cube.cell_slices(m)] = np.asarray(values).reshape((n,) * d)
    return GridFunction(out)


def _strip_moments(v: np.ndarray, d: int, k: int) -> np.ndarray:
    """Remove the L_2 projection onto the discrete polynomial space of a block."""
    n = round(v.size ** (1.0 / d))
    U = _orthonormal(d, k, n)
    return v - U @ (U.T @ v)


def moments(f: GridFunction, cube: Optional[DyadicCube], k: int) -> np.ndarray:
    """``integral_Q t^alpha f dx`` for the local monomials ``|alpha| <= k-1``."""
    cube = cube if cube is not None else DyadicCube.root(f.d)
    n = 1 << (f.m - cube.level)
    B = _design(f.d, k, n)
    return B.T @ _block_vector(f, cube) * f.cell_volume


def _moment_tol(cube: DyadicCube, lam: float) -> float:
    vol = cube.volume
    return MOMENT_TOL * vol * max(1.0, vol ** -lam)


def is_moment_free(g: GridFunction, k: int, tol: float = MOMENT_TOL) -> bool:
    return bool(np.all(np.abs(moments(g, None, k)) <= tol * max(1.0, lq_norm(g, 1))))


@dataclass(frozen=True)
class Atom:
    """A function supported on ``cube``; :meth:`validate` checks the atom conditions."""

    cube: DyadicCube
    values: GridFunction

    def validate(self, kappa: Kappa) -> None:
        f = self.values
        outside = np.array(f.values, copy=True)
        outside[self.cube.cell_slices(f.m)] = 0.0
        if np.any(outside != 0.0):
            raise ValueError("atom is not supported in its cube")
        bound = self.cube.volume ** -kappa.lam_float
        norm = lq_norm(f, kappa.q_conj, self.cube)
        if norm > bound * (1 + NORM_RTOL):
            raise ValueError(f"atom norm {norm} exceeds |Q|^-lambda = {bound}")
        mom = moments(f, self.cube, kappa.k)
        if np.any(np.abs(mom) > _moment_tol(self.cube, kappa.lam_float)):
            raise MomentError(f"atom moments too large: {np.max(np.abs(mom)):.3e}")

    def is_valid(self, kappa: Kappa) -> bool:
        try:
            self.validate(kappa)
        except ValueError:
            return False
        return True

    def to_dict(self) -> dict:
        return {"cube": self.cube.to_json(), "values": _block_vector(self.values, self.cube).tolist()}


@dataclass
class Chain:
    """Atoms over one packing with their coefficients (``sum c_Q a_Q``)."""

    packing: Packing
    atoms: list
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if [a.cube for a in self.atoms] != list(self.packing):
            raise ValueError("atoms must follow the cubes of the packing in order")
        if self.coeffs.size != len(self.atoms):
            raise ValueError("one coefficient per atom is required")

    def synth(self) -> GridFunction:
        if not self.atoms:
            raise ValueError("empty chain has no grid to synthesise on")
        out = np.zeros(self.atoms[0].values.shape)
        for c, a in zip(self.coeffs, self.atoms):
            out += c * a.values.values
        return GridFunction(out)

    def to_dict(self) -> dict:
        return {"atoms": [a.to_dict() for a in self.atoms], "coeffs": self.coeffs.tolist()}


def chain_norm(b: Chain, p_prime) -> float:
    """``l_{p'}`` norm of the chain coefficients."""
    c = np.abs(b.coeffs)
    if c.size == 0:
        return 0.0
    p_prime = ext_real(p_prime)
    if p_prime is INF:
        return float(c.max())
    return float(np.linalg.norm(c, float(p_prime)))


@dataclass
class Decomposition:
    chains: list = field(default_factory=list)

    def cost(self, kappa: Kappa) -> float:
        return float(sum(chain_norm(b, kappa.p_conj) for b in self.chains))

    def synth(self, d: int, m: int) -> GridFunction:
        out = GridFunction.zeros(d, m)
        for b in self.chains:
            if b.atoms:
                out = out + b.synth()
        return out

    def to_dict(self) -> dict:
        return {"chains": [b.to_dict() for b in self.chains]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _normalise(v: np.ndarray, cube: DyadicCube, kappa: Kappa, vol: float) -> tuple[np.ndarray, float]:
    """Scale ``v`` to ``||.||_{q'} = |Q|^-lambda``; returns the scaled block and the factor."""
    norm = _norm_of_block(v, kappa.q_conj, vol)
    scale = norm * cube.volume ** kappa.lam_float
    return v / scale, scale


def make_atom(raw: GridFunction, cube: DyadicCube, kappa: Kappa) -> tuple[Atom, float]:
    """Turn ``raw`` into an atom on ``cube``.

    The restriction to ``cube`` loses its L_2 projection onto the polynomials,
    then is rescaled.  Returns the atom and ``scale`` with
    ``residual = scale * atom``.
    """
    v = _block_vector(raw, cube)
    r = _strip_moments(v, raw.d, kappa.k)
    ref = max(float(np.max(np.abs(v))) if v.size else 0.0, 1e-300)
    if not np.any(np.abs(r) > 1e-12 * ref):
        raise DegenerateAtomError(f"nothing left on {cube} after removing polynomials")
    a, scale = _normalise(r, cube, kappa, raw.cell_volume)
    return Atom(cube, _embed(a, cube, raw.d, raw.m)), float(scale)


def _dual_direction(v: np.ndarray, B: np.ndarray, q, k: int, vol: float) -> np.ndarray:
    """A maximiser direction of ``<v, a>`` over ``||a||_{q'} <= 1``, ``B^T a = 0``."""
    N, r = B.shape
    if q is INF:
        # a = u - w, vol * sum(u + w) <= 1
        c = -np.concatenate([v, -v])
        A_ub = np.full((1, 2 * N), vol)
        A_eq = np.hstack([B.T, -B.T])
        res = linprog(c, A_ub=A_ub, b_ub=[1.0], A_eq=A_eq, b_eq=np.zeros(r),
                      bounds=(0, None), method="highs-ds")
        if res.status != 0:
            raise RuntimeError(f"atom LP failed: {res.message}")
        return res.x[:N] - res.x[N:]
    if q == 1:
        res = linprog(-v, A_eq=B.T, b_eq=np.zeros(r), bounds=(-1.0, 1.0), method="highs-ds")
        if res.status != 0:
            raise RuntimeError(f"atom LP failed: {res.message}")
        return res.x
    qf = float(q)
    c = _fit_coefficients(v, B, q, k)
    resid = v - B @ c
    return np.abs(resid) ** (qf - 1) * np.sign(resid)


def extremal_atom(f: GridFunction, cube: DyadicCube, kappa: Kappa) -> tuple[Atom, float]:
    """An atom ``a`` on ``cube`` with ``pair(f, a) = |Q|^-lambda E_kq(f; Q)``.

    Returns the atom and the attained pairing.
    """
    q = kappa.q
    n = 1 << (f.m - cube.level)
    vol = f.cell_volume
    v = _block_vector(f, cube)
    E = local_approx_error(f, cube, kappa.k, q, canonical=False).error
    if E <= 1e-14 * max(1.0, float(np.max(np.abs(v)))):
        raise DegenerateAtomError(f"f is a polynomial on {cube}: E = {E}")
    if q == 2:
        direction = _strip_moments(v, f.d, kappa.k)
    else:
        direction = _dual_direction(v, _design(f.d, kappa.k, n), q, kappa.k, vol)
        direction = _strip_moments(direction, f.d, kappa.k)
    a, _ = _normalise(direction, cube, kappa, vol)
    atom = Atom(cube, _embed(a, cube, f.d, f.m))
    return atom, pair(f, atom.values)


def _p_conj_norm(x: np.ndarray, p_prime) -> float:
    if x.size == 0:
        return 0.0
    if p_prime is INF:
        return float(np.max(np.abs(x)))
    return float(np.linalg.norm(x, float(p_prime)))


def _holder_dual(t: np.ndarray, p) -> np.ndarray:
    """Coefficients ``c`` with ``||c||_{p'} <= 1`` and ``<c, t> = ||t||_p`` for ``t >= 0``."""
    if p is INF:
        c = np.zeros_like(t)
        c[int(np.argmax(t))] = 1.0
        return c
    pf = float(p)
    if pf == 1.0:
        return np.ones_like(t)
    norm = np.linalg.norm(t, pf)
    if norm == 0:
        return np.zeros_like(t)
    return (t / norm) ** (pf - 1)


def check_pairing_inequality(f: GridFunction, b: Chain, kappa: Kappa,
                             terms: Optional[LocalTerms] = None) -> tuple[float, float, bool]:
    """``|pair(f, b)| <= [b]_{p'} gamma(pi; f)`` for one chain.

    The comparison allows a relative slack of ``1e-9`` plus an absolute floor
    of ``1e-12 ||f||_inf ||b||_1`` for cancellation in the pairing.
    """
    terms = terms or LocalTerms(f, kappa)
    synth = b.synth()
    lhs = abs(pair(f, synth))
    g = gamma(f, b.packing, kappa, terms) if len(b.packing) else 0.0
    rhs = chain_norm(b, kappa.p_conj) * g
    max_level = max(b.packing.max_level, 0)
    v = v_seminorm(f, kappa, max(max_level, f.m), terms).value
    if g > v * (1 + 1e-12) + 1e-300:
        raise AssertionError(f"gamma {g} exceeds the seminorm {v}")
    floor = 1e-12 * float(np.max(np.abs(f.values))) * lq_norm(synth, 1)
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-9) + floor)


@dataclass(frozen=True)
class SearchConfig:
    """Decomposition search settings for :func:`u_norm_upper`.

    strategy : ``"baseline"`` (one chain on the unit cube), ``"split"``
        (greedy split over candidate packings, one recursion level) or
        ``"convex"`` (optimal split across all candidate packings at once).
    uniform_levels : uniform partitions up to this level are candidates.
    all_packings_limit : enumerate every packing when there are at most this many.
    """

    strategy: str = "convex"
    uniform_levels: int = 3
    all_packings_limit: int = 64
    witnesses: tuple = ()

    def __post_init__(self):
        if self.strategy not in ("baseline", "split", "convex"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


def _require_moment_free(g: GridFunction, k: int) -> None:
    mom = moments(g, None, k)
    scale = max(1.0, lq_norm(g, 1))
    if np.any(np.abs(mom) > MOMENT_TOL * scale):
        raise MomentError(f"g has nonzero moments (max {np.max(np.abs(mom)):.3e}); "
                          "it is not a combination of atoms")


def _usable(cube: DyadicCube, d: int, m: int, k: int) -> bool:
    """Cubes with more cells than polynomial dimensions carry nonzero atoms."""
    return (1 << ((m - cube.level) * d)) > math.comb(k - 1 + d, d)


def _candidate_packings(g: GridFunction, kappa: Kappa, cfg: SearchConfig) -> list[Packing]:
    d, m, k = g.d, g.m, kappa.k
    seen = {}

    def add(pi: Packing):
        cubes = tuple(sorted(c for c in pi if _usable(c, d, m, k)))
        if cubes and cubes not in seen:
            seen[cubes] = Packing._trusted(cubes)

    add(Packing._trusted((DyadicCube.root(d),)))
    usable_depth = m
    while usable_depth > 0 and not _usable(DyadicCube(usable_depth, (0,) * d), d, m, k):
        usable_depth -= 1
    if 2 ** (d * usable_depth) <= 4096 and count_packings(d, usable_depth) <= cfg.all_packings_limit:
        for pi in enumerate_packings(d, usable_depth):
            add(pi)
    for level in range(1, min(cfg.uniform_levels, usable_depth) + 1):
        add(uniform_packing(d, level))
    for f in (g,) + tuple(cfg.witnesses):
        add(v_seminorm(f, kappa).certificate)
    return list(seen.values())


def _baseline(g: GridFunction, kappa: Kappa) -> Decomposition:
    root = DyadicCube.root(g.d)
    if not np.any(g.values):
        return Decomposition([])
    atom, scale = make_atom(g, root, kappa)
    return Decomposition([Chain(Packing._trusted((root,)), [atom], [scale])])


def _chain_from_blocks(blocks: dict, g: GridFunction, kappa: Kappa, pi: Packing) -> Optional[Chain]:
    atoms, coeffs, cubes = [], [], []
    for cube in pi:
        v = blocks.get(cube)
        if v is None or not np.any(np.abs(v) > 0):
            continue
        a, scale = _normalise(v, cube, kappa, g.cell_volume)
        cubes.append(cube)
        atoms.append(Atom(cube, _embed(a, cube, g.d, g.m)))
        coeffs.append(scale)
    if not atoms:
        return None
    return Chain(Packing._trusted(tuple(cubes)), atoms, coeffs)


def _assemble(g: GridFunction, kappa: Kappa, parts: list[tuple[Packing, dict]]) -> Decomposition:
    """Build chains from per-cube blocks; the leftover of ``g`` joins the unit-cube chain."""
    d, m = g.d, g.m
    root = DyadicCube.root(d)
    total = np.zeros(g.shape)
    cleaned = []
    for pi, blocks in parts:
        fixed = {}
        for cube, v in blocks.items():
            w = _strip_moments(np.asarray(v, dtype=float), d, kappa.k)
            fixed[cube] = w
            total[cube.cell_slices(m)] += w.reshape((1 << (m - cube.level),) * d)
        cleaned.append((pi, fixed))
    leftover = _strip_moments((g.values - total).reshape(-1), d, kappa.k)
    placed = False
    for pi, fixed in cleaned:
        if len(pi) == 1 and root in pi:
            fixed[root] = fixed.get(root, 0.0) + leftover
            placed = True
    if not placed:
        cleaned.append((Packing._trusted((root,)), {root: leftover}))
    chains = [c for c in (_chain_from_blocks(fx, g, kappa, pi) for pi, fx in cleaned) if c is not None]
    return Decomposition(chains)


def _split_search(g: GridFunction, kappa: Kappa, cfg: SearchConfig) -> Decomposition:
    """Greedy: keep the best single split ``g = sum_Q g_Q + rest`` over candidates."""
    d, m = g.d, g.m
    best = _baseline(g, kappa)
    best_cost = best.cost(kappa)
    for pi in _candidate_packings(g, kappa, cfg):
        blocks = {c: _strip_moments(_block_vector(g, c), d, kappa.k) for c in pi}
        dec = _assemble(g, kappa, [(pi, blocks)])
        cost = dec.cost(kappa)
        if cost < best_cost:
            best, best_cost = dec, cost
            # one more level: split each cube of the winner across its children
            children = [ch for c in pi for ch in c.children() if _usable(ch, d, m, kappa.k)]
            if children:
                sub = Packing._trusted(tuple(children))
                sub_blocks = {c: _strip_moments(_block_vector(g, c), d, kappa.k) for c in sub}
                dec2 = _assemble(g, kappa, [(sub, sub_blocks)])
                if dec2.cost(kappa) < best_cost:
                    best, best_cost = dec2, dec2.cost(kappa)
    return best


def _convex_search(g: GridFunction, kappa: Kappa, cfg: SearchConfig) -> Decomposition:
    """Optimal split of ``g`` across all candidate packings (a conic program)."""
    import cvxpy as cp

    d, m = g.d, g.m
    vol = g.cell_volume
    q_conj, p_conj = kappa.q_conj, kappa.p_conj
    lam = kappa.lam_float
    packings = _candidate_packings(g, kappa, cfg)
    contrib = {}
    variables = []
    cost_terms = []
    cons = []
    for pi in packings:
        blocks = {}
        t = []
        for cube in pi:
            n = 1 << (m - cube.level)
            x = cp.Variable(n**d)
            B = _design(d, kappa.k, n)
            cons.append(B.T @ x == 0)
            blocks[cube] = x
            qn = "inf" if q_conj is INF else float(q_conj)
            weight = cube.volume**lam * (1.0 if q_conj is INF else vol ** (1.0 / float(q_conj)))
            t.append(weight * cp.norm(x, qn))
            for flat in np.ndindex(*(n,) * d):
                cell = tuple(o * n + i for o, i in zip(cube.index, flat))
                contrib.setdefault(cell, []).append((x, int(np.ravel_multi_index(flat, (n,) * d))))
        pn = "inf" if p_conj is INF else float(p_conj)
        cost_terms.append(cp.norm(cp.hstack(t), pn) if len(t) > 1 else t[0])
        variables.append((pi, blocks))
    for cell in np.ndindex(*g.shape):
        terms = contrib.get(cell, [])
        if terms:
            cons.append(sum(x[i] for x, i in terms) == g.values[cell])
    prob = cp.Problem(cp.Minimize(sum(cost_terms)), cons)
    try:
        prob.solve()
    except cp.error.SolverError:
        return _baseline(g, kappa)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return _baseline(g, kappa)
    parts = [(pi, {c: np.asarray(x.value, dtype=float) for c, x in blocks.items()})
             for pi, blocks in variables]
    return _assemble(g, kappa, parts)


def u_norm_upper(g: GridFunction, kappa: Kappa, budget: Optional[SearchConfig] = None) -> NormReport:
    """Cost of an explicit decomposition of ``g`` into chains (an upper bound).

    Never exceeds ``||g||_{q'}`` (the single chain on the unit cube).
    """
    budget = budget or SearchConfig()
    if kappa.d != g.d:
        raise ValueError("kappa.d does not match the grid")
    _require_moment_free(g, kappa.k)
    base = _baseline(g, kappa)
    best = base
    if budget.strategy == "split":
        best = _split_search(g, kappa, budget)
    elif budget.strategy == "convex" and base.chains:
        best = _convex_search(g, kappa, budget)
    err = lq_norm(best.synth(g.d, g.m) - g, INF)
    if err > 1e-9 * max(1.0, lq_norm(g, INF)) or best.cost(kappa) > base.cost(kappa):
        best = base
    return NormReport(best.cost(kappa), best, {"kappa": kappa.to_dict(), "m": g.m,
                                               "strategy": budget.strategy,
                                               "chains": len(best.chains)})


def _witness_lower(g: GridFunction, kappa: Kappa, witnesses: Sequence[GridFunction]) -> NormReport:
    best, arg = 0.0, None
    for i, f in enumerate(witnesses):
        v = v_seminorm(f, kappa).value
        if v <= 1e-13 * max(1.0, lq_norm(f, INF)):
            continue
        ratio = abs(pair(f, g)) / v
        if ratio > best:
            best, arg = ratio, i
    return NormReport(best, arg, {"mode": "witness", "witnesses": len(witnesses)})


def _cut_for(f: GridFunction, kappa: Kappa) -> tuple[np.ndarray, float]:
    """A linear functional ``b`` with ``<h, b> <= |h|_V`` for all ``h`` and ``<f, b> = |f|_V``."""
    rep = v_seminorm(f, kappa)
    pi = rep.certificate
    cubes = list(pi)
    if not cubes:
        return np.zeros(f.shape), 0.0
    atoms, t = [], []
    for cube in cubes:
        atom, val = extremal_atom(f, cube, kappa)
        atoms.append(atom)
        t.append(val)
    c = _holder_dual(np.asarray(t), kappa.p)
    b = sum(ci * a.values.values for ci, a in zip(c, atoms))
    return b * f.cell_volume, rep.value


def _exact_lower(g: GridFunction, kappa: Kappa, tol: float = 1e-6, max_iter: int = 500) -> NormReport:
    """``sup{<f, g> : |f|_V <= 1}`` by a Kelley cutting-plane method.

    The outer LP over moment-free ``f`` carries the cuts ``<f, b_j> <= 1``,
    each ``b_j`` a subgradient of the seminorm built from extremal atoms of the
    DP certificate.  Stops when the LP bound and the best feasible value agree.
    """
    if kappa.q not in (2, INF):
        raise ValueError("the exact dual oracle supports q = 2 and q = inf only")
    N = g.values.size
    if N > EXACT_MAX_CELLS:
        raise ValueError(f"exact mode refused: {N} cells exceeds {EXACT_MAX_CELLS}")
    d, m, vol = g.d, g.m, g.cell_volume
    gv = g.values.reshape(-1) * vol
    B = _design(d, kappa.k, 1 << m)
    cuts = []
    box = 1.0
    lower, best_f = 0.0, None
    upper = math.inf
    for it in range(max_iter):
        A_ub = np.array(cuts) if cuts else None
        b_ub = np.ones(len(cuts)) if cuts else None
        res = linprog(-gv, A_ub=A_ub, b_ub=b_ub, A_eq=B.T, b_eq=np.zeros(B.shape[1]),
                      bounds=(-box, box), method="highs-ds")
        if res.status != 0:
            raise RuntimeError(f"cutting-plane LP failed: {res.message}")
        x = res.x
        if np.max(np.abs(x)) >= box * (1 - 1e-9):
            box *= 2.0
            if box > 1e12:
                raise RuntimeError("dual problem appears unbounded")
            upper = math.inf
        else:
            upper = -res.fun
        f = GridFunction(x.reshape(g.shape))
        cut, v = _cut_for(f, kappa)
        if v > 1e-14:
            val = float(np.dot(x, gv)) / v
            if val > lower:
                lower, best_f = val, f * (1.0 / v)
            cuts.append(cut.reshape(-1))
        if math.isfinite(upper) and upper - lower <= tol * max(1.0, upper):
            break
    return NormReport(lower, best_f, {"mode": "exact", "upper_bound": upper, "iterations": it + 1,
                                      "cuts": len(cuts)})


def u_norm_lower(g: GridFunction, kappa: Kappa, witnesses: Sequence[GridFunction] = (),
                 exact: bool = False) -> NormReport:
    """Lower bound on the U-norm of ``g`` by pairing with functions of known variation."""
    if kappa.d != g.d:
        raise ValueError("kappa.d does not match the grid")
    _require_moment_free(g, kappa.k)
    if not np.any(g.values):
        return NormReport(0.0, None, {"mode": "exact" if exact else "witness"})
    if exact:
        return _exact_lower(g, kappa)
    return _witness_lower(g, kappa, witnesses)


def duality_gap(g: GridFunction, kappa: Kappa, witnesses: Sequence[GridFunction] = (),
                exact: Optional[bool] = None,
                budget: Optional[SearchConfig] = None) -> tuple[float, float, float]:
    """``(lower, upper, (upper - lower) / upper)`` for the U-norm of ``g``.

    ``exact=None`` uses the exact dual whenever the instance is small enough.
    """
    if not classify(kappa).duality_valid:
        raise ValueError(f"duality needs q > 1 and s <= k; kappa = {kappa}")
    if not np.any(g.values):
        return 0.0, 0.0, 0.0
    if exact is None:
        exact = g.values.size <= EXACT_MAX_CELLS and kappa.q in (2, INF)
    lo = u_norm_lower(g, kappa, witnesses, exact).value
    up = u_norm_upper(g, kappa, budget).value
    return lo, up, (up - lo) / max(up, 1e-300)
