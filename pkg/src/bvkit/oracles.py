"""Independent reference computations used to audit the fast paths.

* :func:`dp_vs_enumeration` compares the tree DP with the maximum of the
  packing functional over every packing.
* :func:`random_chain` draws chains of random atoms for the pairing inequality.
* :func:`chebyshev_bruteforce` and :func:`l1_bruteforce` recompute best
  approximation errors from their finite characterisations (reference subsets
  and interpolating subsets) without a linear programming solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube, Packing, enumerate_packings, packing_membership, random_packing
from .grid import GridFunction
from .params import Kappa
from .polyapprox import _design, local_approx_error
from .variation import LocalTerms, gamma_many, v_seminorm

__all__ = [
    "OracleResult",
    "dp_vs_enumeration",
    "chebyshev_bruteforce",
    "l1_bruteforce",
    "lp_vs_bruteforce",
    "random_chain",
]


@dataclass
class OracleResult:
    name: str
    checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def dp_vs_enumeration(d: int, L: int, kappas, count: int, rng: np.random.Generator,
                      m=None) -> OracleResult:
    """DP value against ``max gamma`` over all packings; equality is bitwise."""
    m = L if m is None else m
    packings = list(enumerate_packings(d, L))
    masks = packing_membership(packings, d, L)
    out = OracleResult(f"dp-vs-enumeration d={d} L={L}")
    for kappa in kappas:
        for _ in range(count):
            f = GridFunction(rng.normal(size=(1 << m,) * d))
            terms = LocalTerms(f, kappa)
            dp = v_seminorm(f, kappa, L, terms).value
            best = float(gamma_many(f, packings, kappa, L, terms, masks=masks).max())
            out.checked += 1
            if dp != best:
                out.mismatches.append((str(kappa), dp, best))
    return out


def _null_vector(A: np.ndarray) -> np.ndarray:
    """Left null vector of an ``(r+1) x r`` matrix of full column rank."""
    u, s, _ = np.linalg.svd(A)
    return u[:, -1]


def chebyshev_bruteforce(v: np.ndarray, B: np.ndarray) -> float:
    """``min_c max |v - B c|`` as the largest error over reference subsets of size ``r+1``."""
    N, r = B.shape
    best = 0.0
    for S in itertools.combinations(range(N), r + 1):
        BS = B[list(S)]
        if np.linalg.matrix_rank(BS) < r:
            continue
        lam = _null_vector(BS)
        best = max(best, abs(float(lam @ v[list(S)])) / float(np.abs(lam).sum()))
    return best


def l1_bruteforce(v: np.ndarray, B: np.ndarray) -> float:
    """``min_c sum |v - B c|``; some minimiser interpolates ``v`` on ``r`` points."""
    N, r = B.shape
    best = np.inf
    for S in itertools.combinations(range(N), r):
        BS = B[list(S)]
        if np.linalg.matrix_rank(BS) < r:
            continue
        c = np.linalg.solve(BS, v[list(S)])
        best = min(best, float(np.abs(v - B @ c).sum()))
    return best


def lp_vs_bruteforce(d: int, m: int, ks, count: int, rng: np.random.Generator,
                     rtol: float = 1e-9) -> OracleResult:
    """Linear programming errors against the brute-force characterisations."""
    out = OracleResult(f"lp-vs-bruteforce d={d} m={m}")
    n = 1 << m
    for k in ks:
        B = _design(d, k, n)
        for _ in range(count):
            f = GridFunction(rng.normal(size=(n,) * d))
            v = f.values.reshape(-1)
            root = DyadicCube.root(d)
            lp_inf = local_approx_error(f, root, k, "inf", canonical=False).error
            lp_one = local_approx_error(f, root, k, 1, canonical=False).error
            bf_inf = chebyshev_bruteforce(v, B)
            bf_one = l1_bruteforce(v, B) * f.cell_volume
            out.checked += 2
            for tag, a, b in (("inf", lp_inf, bf_inf), ("1", lp_one, bf_one)):
                if abs(a - b) > rtol * max(1.0, abs(b)):
                    out.mismatches.append((k, tag, a, b))
    return out


def random_chain(d: int, m: int, kappa: Kappa, rng: np.random.Generator, max_level=None):
    """A chain of random atoms over a random packing (cubes too small for atoms dropped)."""
    from .atoms import Chain, make_atom, _usable

    max_level = m if max_level is None else max_level
    for _ in range(100):
        pi = random_packing(d, max_level, rng)
        cubes = [c for c in pi if _usable(c, d, m, kappa.k)]
        if cubes:
            break
    else:
        cubes = [DyadicCube.root(d)]
    atoms = [make_atom(GridFunction(rng.normal(size=(1 << m,) * d)), c, kappa)[0] for c in cubes]
    coeffs = rng.normal(size=len(atoms)) * rng.choice([1e-2, 1.0, 1e2], size=len(atoms))
    return Chain(Packing(cubes), atoms, coeffs)
