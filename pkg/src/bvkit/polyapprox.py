"""Local polynomial approximation on dyadic cubes.

The polynomial space on a cube ``Q`` is represented on the grid: a polynomial
of total degree ``<= k-1`` becomes the piecewise-constant function holding its
exact cell averages.  ``E_kq(f; Q)`` is the ``L_q(Q)`` distance from ``f`` to
that finite-dimensional space, so grid projections of polynomials are
annihilated exactly and the best-approximation duality used by the atoms
module holds without discretisation error.

Coordinates are rescaled so that ``Q`` maps to ``[-1, 1]^d``; coefficients
returned by :func:`local_approx_error` refer to that local frame.
"""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog, minimize

from .dyadic import DyadicCube
from .grid import GridFunction, _norm_of_block
from .params import INF, ext_real

__all__ = [
    "PolyBasis",
    "LocalFit",
    "Oscillation",
    "local_approx_error",
    "level_errors",
    "level_blocks",
    "blocks_to_grid",
    "k_oscillation",
    "whitney_ratio",
    "delta_k",
    "finite_difference",
]

LQ_MAX_ITER = 500
LQ_GTOL = 1e-11
_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _exponents(d: int, k: int) -> tuple:
    out = []
    for total in range(k):
        for alpha in itertools.product(range(total + 1), repeat=d):
            if sum(alpha) == total:
                out.append(alpha)
    # within each degree, lexicographically descending puts x_1 first
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return tuple(out)


def _axis_averages(n: int, power: int) -> np.ndarray:
    edges = np.linspace(-1.0, 1.0, n + 1)
    a, b = edges[:-1], edges[1:]
    if power == 0:
        return np.ones(n)
    return (b ** (power + 1) - a ** (power + 1)) / ((power + 1) * (b - a))


@functools.lru_cache(maxsize=None)
def _design(d: int, k: int, n: int) -> np.ndarray:
    exps = _exponents(d, k)
    cols = []
    for alpha in exps:
        col = np.ones(())
        for axis, a in enumerate(alpha):
            shape = [1] * d
            shape[axis] = n
            col = col * _axis_averages(n, a).reshape(shape)
        cols.append(np.broadcast_to(col, (n,) * d).reshape(-1))
    out = np.stack(cols, axis=1)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=None)
def _orthonormal(d: int, k: int, n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the discrete polynomial space on an n^d block."""
    B = _design(d, k, n)
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-12))
    out = np.ascontiguousarray(u[:, :rank])
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PolyBasis:
    """Monomials ``t^alpha`` with ``|alpha| <= k-1`` in the cube-local frame ``[-1,1]^d``."""

    d: int
    k: int

    @property
    def exponents(self) -> tuple:
        return _exponents(self.d, self.k)

    @property
    def dim(self) -> int:
        return math.comb(self.k - 1 + self.d, self.d)

    def design(self, n: int) -> np.ndarray:
        """Cell averages of each monomial over an ``n^d`` block, shape ``(n^d, dim)``."""
        return _design(self.d, self.k, n)

    def orthonormal(self, n: int) -> np.ndarray:
        return _orthonormal(self.d, self.k, n)

    def on_cube(self, f: GridFunction, cube: DyadicCube) -> np.ndarray:
        """Design matrix for the cells of ``cube`` at the resolution of ``f``."""
        return self.design(1 << (f.m - cube.level))

    def grid_monomials(self, m: int, cube: DyadicCube) -> list[GridFunction]:
        """Each local monomial as a full-size grid function vanishing off ``cube``."""
        B = self.design(1 << (m - cube.level))
        n = 1 << (m - cube.level)
        out = []
        for j in range(B.shape[1]):
            arr = np.zeros((1 << m,) * self.d)
            arr[cube.cell_slices(m)] = B[:, j].reshape((n,) * self.d)
            out.append(GridFunction(arr))
        return out


@dataclass(frozen=True)
class LocalFit:
    """Best local polynomial fit: the error, its coefficients and the residual."""

    error: float
    coefficients: np.ndarray
    residual: GridFunction
    cube: DyadicCube
    q: object


def _check_level(f: GridFunction, cube: DyadicCube) -> None:
    if cube.d != f.d:
        raise ValueError(f"cube dimension {cube.d} does not match grid dimension {f.d}")
    if cube.level > f.m:
        raise ValueError(f"cube at level {cube.level} is finer than the grid (m={f.m})")


def _chebyshev_lp(v: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Coefficients minimising ``max |v - B c|``."""
    return _batched_lp_coefficients(v[None, :], B, INF)[0]


def _l1_lp(v: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Coefficients minimising ``sum |v - B c|``."""
    return _batched_lp_coefficients(v[None, :], B, 1)[0]


def _batched_lp_coefficients(rows: np.ndarray, B: np.ndarray, q) -> np.ndarray:
    """Chebyshev (``q = INF``) or L1 fits of every row at once.

    Solves the dual problem ``max <v, y>`` over ``B^T y = 0`` with
    ``||y||_1 <= 1`` (Chebyshev) or ``|y_i| <= 1`` (L1); the optimal
    coefficients are minus the marginals of the equality rows.  The dual has
    one row per monomial instead of one per cell, and the independent rows
    are stacked block-diagonally into a single solve.
    """
    M, N = rows.shape
    nb = B.shape[1]
    eye_m = sparse.identity(M, format="csr")
    Bt = sparse.csr_matrix(B.T)
    if q is INF:
        A_eq = sparse.kron(eye_m, sparse.hstack([Bt, -Bt]), format="csr")
        A_ub = sparse.kron(eye_m, sparse.csr_matrix(np.ones((1, 2 * N))), format="csr")
        cost = -np.concatenate([rows, -rows], axis=1).reshape(-1)
        res = linprog(cost, A_ub=A_ub, b_ub=np.ones(M), A_eq=A_eq, b_eq=np.zeros(M * nb),
                      bounds=(0, None), method="highs-ds", options=_LP_OPTIONS)
    else:
        A_eq = sparse.kron(eye_m, Bt, format="csr")
        res = linprog(-rows.reshape(-1), A_eq=A_eq, b_eq=np.zeros(M * nb), bounds=(-1, 1),
                      method="highs-ds", options=_LP_OPTIONS)
    if res.status != 0:
        raise RuntimeError(f"approximation LP failed: {res.message}")
    return -np.asarray(res.eqlin.marginals).reshape(M, nb)


def _lq_fit(v: np.ndarray, B: np.ndarray, q: float) -> np.ndarray:
    """Minimise ``sum |v - B c|^q`` for ``1 < q < inf`` (smooth and convex)."""
    c0 = np.linalg.lstsq(B, v, rcond=None)[0]
    scale = float(np.max(np.abs(v - B @ c0)))
    if scale == 0.0:
        return c0

    def objective(c):
        r = (v - B @ c) / scale
        a = np.abs(r)
        return float(np.sum(a**q)), -q * (B.T @ (a ** (q - 1) * np.sign(r))) / scale

    res = minimize(objective, c0, jac=True, method="BFGS", options={"gtol": LQ_GTOL, "maxiter": LQ_MAX_ITER})
    if not res.success and res.fun > objective(c0)[0]:
        warnings.warn(f"L_q fit stopped early (q={q}): {res.message}")
        return c0
    return res.x


def _fit_coefficients(v: np.ndarray, B: np.ndarray, q, k: int) -> np.ndarray:
    """Minimising coefficients for one block (unique up to LP degeneracy)."""
    if k == 1:
        if q is INF:
            return np.array([0.5 * (v.max() + v.min())])
        if q == 1:
            s = np.sort(v)
            lo, hi = s[(len(s) - 1) // 2], s[len(s) // 2]
            return np.array([min(max(0.0, lo), hi)])
        if q == 2:
            return np.array([v.mean()])
    if q == 2:
        return np.linalg.lstsq(B, v, rcond=None)[0]
    if q is INF:
        return _chebyshev_lp(v, B)
    if q == 1:
        return _l1_lp(v, B)
    return _lq_fit(v, B, float(q))


def _least_norm_refinement(v: np.ndarray, B: np.ndarray, q, c0: np.ndarray, err: float) -> np.ndarray:
    """Among (near-)optimal coefficient vectors pick the one of least Euclidean norm."""
    import cvxpy as cp

    c = cp.Variable(B.shape[1])
    order = "inf" if q is INF else 1
    bound = err * (1 + 1e-9) + 1e-12
    prob = cp.Problem(cp.Minimize(cp.sum_squares(c)), [cp.norm(v - B @ c, order) <= bound])
    try:
        with warnings.catch_warnings():
            # inaccurate solutions are screened against the error bound below
            warnings.simplefilter("ignore", UserWarning)
            prob.solve()
    except cp.error.SolverError:
        return c0
    if c.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        return c0
    cand = np.asarray(c.value, dtype=float)
    r = v - B @ cand
    cand_err = np.max(np.abs(r)) if q is INF else np.abs(r).sum()
    if cand_err <= err * (1 + 1e-8) + 1e-12 and np.linalg.norm(cand) < np.linalg.norm(c0):
        return cand
    return c0


def local_approx_error(f: GridFunction, cube: Optional[DyadicCube], k: int, q=2,
                       canonical: bool = True) -> LocalFit:
    """Best ``L_q(Q)`` approximation of ``f`` by polynomials of degree ``<= k-1``.

    Parameters
    ----------
    f : GridFunction
    cube : DyadicCube or None
        ``None`` means the whole unit cube.
    k : int
        Polynomial order.
    q : extended real
        ``1``, ``2`` and ``INF`` are solved exactly (LP / projection); other
        finite exponents minimise the smooth convex objective by BFGS.
    canonical : bool
        For ``q in {1, INF}`` choose the least-norm minimiser among ties.
    """
    q = ext_real(q)
    if q is not INF and q < 1:
        raise ValueError(f"q must lie in [1, inf], got {q}")
    cube = cube if cube is not None else DyadicCube.root(f.d)
    _check_level(f, cube)
    n = 1 << (f.m - cube.level)
    B = _design(f.d, k, n)
    if np.linalg.matrix_rank(B) != B.shape[1] and n ** f.d >= B.shape[1]:
        raise AssertionError("singular monomial design on a nontrivial cube")
    v = f.block(cube).reshape(-1)
    c = _fit_coefficients(v, B, q, k)
    r = v - B @ c
    err = _norm_of_block(r, q, f.cell_volume)
    if canonical and k > 1 and (q is INF or q == 1) and n ** f.d > B.shape[1]:
        raw_err = float(np.max(np.abs(r))) if q is INF else float(np.abs(r).sum())
        # the reported error stays the optimal value; the tie-broken residual
        # may exceed it by the refinement tolerance (relative 1e-8)
        c = _least_norm_refinement(v, B, q, c, raw_err)
        r = v - B @ c
    residual = np.zeros(f.shape)
    residual[cube.cell_slices(f.m)] = r.reshape((n,) * f.d)
    return LocalFit(error=err, coefficients=c, residual=GridFunction(residual), cube=cube, q=q)


def level_blocks(values: np.ndarray, level: int) -> np.ndarray:
    """Rows are the cell values of each level-``level`` cube, C-ordered by cube index."""
    d = values.ndim
    n = values.shape[0]
    c = 1 << level
    b = n // c
    if b < 1:
        raise ValueError("level is finer than the grid")
    arr = values.reshape(sum(((c, b) for _ in range(d)), ()))
    arr = arr.transpose(tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2)))
    return arr.reshape(c**d, b**d)


def blocks_to_grid(rows: np.ndarray, d: int, level: int) -> np.ndarray:
    """Inverse of :func:`level_blocks`."""
    c = 1 << level
    b = round(rows.shape[1] ** (1.0 / d))
    arr = rows.reshape((c,) * d + (b,) * d)
    perm = []
    for axis in range(d):
        perm += [axis, d + axis]
    return arr.transpose(perm).reshape((c * b,) * d)


CIRCUIT_LIMIT = 6000


@functools.lru_cache(maxsize=None)
def _circuit_weights(d: int, k: int, n: int) -> Optional[np.ndarray]:
    """Rows ``y`` with ``B^T y = 0`` and ``||y||_1 = 1`` supported on minimal dependent cell sets.

    These are the vertices (up to sign) of the dual feasible set of the
    Chebyshev problem, so ``min_c max |v - B c| = max_y |<y, v>|``.  Returns
    ``None`` when there are too many candidate subsets to enumerate.
    """
    B = _design(d, k, n)
    N, r = B.shape
    if sum(math.comb(N, s) for s in range(2, r + 2)) > CIRCUIT_LIMIT:
        return None
    rows = []
    for size in range(2, r + 2):
        for S in itertools.combinations(range(N), size):
            BS = B[list(S)]
            u, sv, _ = np.linalg.svd(BS)
            rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size else 0
            if rank != size - 1:
                continue
            y = np.zeros(N)
            y[list(S)] = u[:, -1]
            rows.append(y / np.abs(y).sum())
    W = np.array(rows) if rows else np.zeros((0, N))
    W.setflags(write=False)
    return W


def level_errors(f: GridFunction, level: int, k: int, q=2) -> np.ndarray:
    """``E_kq(f; Q)`` for every cube ``Q`` of one level, shape ``(2^level,)*d``.

    This batch routine is the single source of local errors for the packing
    functional and the tree DP, which keeps their arithmetic identical.
    """
    q = ext_real(q)
    if level > f.m:
        raise ValueError(f"level {level} is finer than the grid (m={f.m})")
    d = f.d
    rows = level_blocks(f.values, level)
    n = 1 << (f.m - level)
    vol = f.cell_volume
    shape = (1 << level,) * d
    if rows.shape[1] == 1:
        return np.zeros(shape)
    if k == 1 and q is INF:
        out = 0.5 * (rows.max(axis=1) - rows.min(axis=1))
    elif k == 1 and q == 1:
        med = np.median(rows, axis=1, keepdims=True)
        out = np.abs(rows - med).sum(axis=1) * vol
    elif q == 2:
        U = _orthonormal(d, k, n)
        resid = rows - (rows @ U) @ U.T
        out = np.sqrt(np.einsum("ij,ij->i", resid, resid) * vol)
    elif q is INF and (W := _circuit_weights(d, k, n)) is not None:
        out = np.abs(rows @ W.T).max(axis=1) if W.shape[0] else np.zeros(rows.shape[0])
    elif q is INF or q == 1:
        B = _design(d, k, n)
        resid = rows - _batched_lp_coefficients(rows, B, q) @ B.T
        if q is INF:
            out = np.abs(resid).max(axis=1)
        else:
            out = np.abs(resid).sum(axis=1) * vol
    else:
        B = _design(d, k, n)
        out = np.empty(rows.shape[0])
        for i, v in enumerate(rows):
            c = _fit_coefficients(v, B, q, k)
            out[i] = _norm_of_block(v - B @ c, q, vol)
    return out.reshape(shape)


def finite_difference(block: np.ndarray, h: tuple, k: int) -> np.ndarray:
    """``Delta_h^k`` on the cells ``x`` with ``x`` and ``x + k h`` inside the block."""
    d = block.ndim
    n = block.shape
    lo = [max(0, -k * hi) for hi in h]
    hi_ = [n[a] - max(0, k * h[a]) for a in range(d)]
    if any(hi_[a] <= lo[a] for a in range(d)):
        return np.zeros((0,) * d)
    out = np.zeros(tuple(hi_[a] - lo[a] for a in range(d)))
    for j in range(k + 1):
        coef = (-1) ** (k - j) * math.comb(k, j)
        sl = tuple(slice(lo[a] + j * h[a], hi_[a] + j * h[a]) for a in range(d))
        out = out + coef * block[sl]
    return out


def _half_space_shifts(d: int, limit: int):
    """Nonzero integer vectors with entries in ``(-limit, limit)``, one per ``±h`` pair."""
    for h in itertools.product(range(-limit + 1, limit), repeat=d):
        first = next((x for x in h if x != 0), 0)
        if first > 0:
            yield h


class Oscillation(NamedTuple):
    value: float
    shift: Optional[tuple]  # None flags that no lattice shift was admissible


def k_oscillation(f: GridFunction, cube: Optional[DyadicCube], k: int, q=INF) -> Oscillation:
    """Largest ``L_q`` norm of the ``k``-th difference over admissible lattice shifts."""
    q = ext_real(q)
    cube = cube if cube is not None else DyadicCube.root(f.d)
    _check_level(f, cube)
    block = f.block(cube)
    n = block.shape[0]
    limit = -(-n // k)  # need k*|h_i| <= n - 1
    best, arg = 0.0, None
    for h in _half_space_shifts(f.d, limit):
        if any(k * abs(x) >= n for x in h):
            continue
        diff = finite_difference(block, h, k)
        if diff.size == 0:
            continue
        val = _norm_of_block(diff, q, f.cell_volume)
        if arg is None or val > best:
            best, arg = val, h
    return Oscillation(best, arg)


def whitney_ratio(f: GridFunction, cube: Optional[DyadicCube], k: int, q=INF) -> Optional[float]:
    """``E_kq(f;Q) / osc_kq(f;Q)``, or ``None`` when the oscillation vanishes."""
    osc = k_oscillation(f, cube, k, q).value
    if osc == 0.0:
        return None
    return local_approx_error(f, cube, k, q, canonical=False).error / osc


def _center_index(f: GridFunction, x: float) -> int:
    pos = x * f.n - 0.5
    idx = round(pos)
    if abs(pos - idx) > 1e-9 or not 0 <= idx < f.n:
        raise ValueError(f"point {x} is not a cell centre of the resolution-{f.m} grid")
    return idx


def delta_k(f: GridFunction, a: float, b: float, k: int) -> float:
    """``|Delta_h^k f(a)|`` with ``h = (b - a)/k``; nodes must be cell centres (d = 1)."""
    if f.d != 1:
        raise ValueError("delta_k is defined for d = 1 only")
    if not a < b:
        raise ValueError("need a < b")
    v = f.values
    total = 0.0
    for j in range(k + 1):
        idx = _center_index(f, a + j * (b - a) / k)
        total += (-1) ** (k - j) * math.comb(k, j) * v[idx]
    return abs(total)
