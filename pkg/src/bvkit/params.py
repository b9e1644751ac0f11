"""Parameter pack for the variation seminorms and its regime classification.

Exponents ``p`` and ``q`` are extended reals: either a finite value ``>= 1`` or
the enumeration member :data:`INF`.  Finite values are kept as
:class:`fractions.Fraction` whenever they are recognisably rational, so the
regime thresholds (``s == k`` in particular) are decided exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

__all__ = [
    "INF",
    "Infinity",
    "Kappa",
    "Regime",
    "ext_real",
    "reciprocal",
    "as_float",
    "conjugate",
    "smoothness",
    "classify",
]

FLOAT_TOL = 1e-12


class Infinity(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"


INF = Infinity.INF

Real = Union[Fraction, float]
ExtReal = Union[Fraction, float, Infinity]


def _rational(x) -> Real:
    """Convert ``x`` to a Fraction when that is lossless, else keep a float."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return _rational(Fraction(x.strip()))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"expected a finite real, got {x}")
    frac = Fraction(x).limit_denominator(10**6)
    if float(frac) == x:
        return frac
    return x


def ext_real(x) -> ExtReal:
    """Parse an extended real; accepts numbers, ``"inf"``, ``"∞"`` and :data:`INF`."""
    if isinstance(x, Infinity):
        return x
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "∞", "+inf"):
        return INF
    if isinstance(x, float) and math.isinf(x) and x > 0:
        return INF
    return _rational(x)


def reciprocal(r: ExtReal) -> Real:
    """``1/r`` with ``1/INF == 0`` exactly."""
    if r is INF:
        return Fraction(0)
    if isinstance(r, Fraction):
        return 1 / r
    return 1.0 / r


def as_float(r: ExtReal) -> float:
    return math.inf if r is INF else float(r)


def conjugate(r) -> ExtReal:
    """Hölder conjugate: ``1/r + 1/r' = 1``; ``1 -> INF`` and ``INF -> 1``."""
    r = ext_real(r)
    if r is INF:
        return Fraction(1)
    if r < 1:
        raise ValueError(f"exponent must lie in [1, inf], got {r}")
    if r == 1:
        return INF
    if isinstance(r, Fraction):
        return r / (r - 1)
    return r / (r - 1.0)


def _check_exponent(name: str, r: ExtReal) -> None:
    if r is not INF and r < 1:
        raise ValueError(f"{name} must lie in [1, inf], got {r}")


@dataclass(frozen=True)
class Kappa:
    """The parameter pack ``{k, d, lambda, p, q}``.

    ``k`` is the polynomial order (approximation by total degree ``<= k-1``),
    ``d`` the dimension, ``lam`` the scaling exponent and ``p``, ``q`` the
    outer (packing) and inner (local ``L_q``) exponents.
    """

    k: int
    d: int
    lam: Real
    p: ExtReal
    q: ExtReal

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "lam", _rational(self.lam))
        object.__setattr__(self, "p", ext_real(self.p))
        object.__setattr__(self, "q", ext_real(self.q))
        _check_exponent("p", self.p)
        _check_exponent("q", self.q)

    @classmethod
    def parse(cls, text: str) -> "Kappa":
        """Parse ``"k,d,lambda,p,q"``, e.g. ``"1,1,0,1,inf"`` or ``"2,2,1/4,2,2"``."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 5:
            raise ValueError(f"expected 'k,d,lambda,p,q', got {text!r}")
        k, d, lam, p, q = parts
        return cls(int(k), int(d), lam, p, q)

    @property
    def p_conj(self) -> ExtReal:
        return conjugate(self.p)

    @property
    def q_conj(self) -> ExtReal:
        return conjugate(self.q)

    @property
    def lam_float(self) -> float:
        return float(self.lam)

    def replace(self, **changes) -> "Kappa":
        fields = dict(k=self.k, d=self.d, lam=self.lam, p=self.p, q=self.q)
        fields.update(changes)
        return Kappa(**fields)

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "lambda": str(self.lam), "p": str(self.p), "q": str(self.q)}

    @classmethod
    def from_dict(cls, data: dict) -> "Kappa":
        return cls(data["k"], data["d"], data.get("lambda", data.get("lam")), data["p"], data["q"])

    def __str__(self) -> str:
        return f"{self.k},{self.d},{self.lam},{self.p},{self.q}"


def smoothness(kappa: Kappa) -> Real:
    """``s = d * (lambda + 1/p - 1/q)``; exact when all inputs are rational."""
    return kappa.d * (kappa.lam + reciprocal(kappa.p) - reciprocal(kappa.q))


def _compare(a: Real, b: Real) -> int:
    """Three-way comparison, exact for Fractions and tolerant for floats."""
    if isinstance(a, Fraction) and isinstance(b, (Fraction, int)):
        return (a > b) - (a < b)
    diff = float(a) - float(b)
    if abs(diff) <= FLOAT_TOL * max(1.0, abs(float(b))):
        return 0
    return 1 if diff > 0 else -1


@dataclass(frozen=True)
class Regime:
    smoothness: Real
    degenerate: bool
    maximal: bool
    duality_valid: bool
    two_stars_valid: bool

    def to_dict(self) -> dict:
        return {
            "smoothness": str(self.smoothness),
            "degenerate": self.degenerate,
            "maximal": self.maximal,
            "duality_valid": self.duality_valid,
            "two_stars_valid": self.two_stars_valid,
        }


def classify(kappa: Kappa) -> Regime:
    s = smoothness(kappa)
    c = _compare(s, kappa.k)
    q_gt_1 = kappa.q is INF or kappa.q > 1
    p_gt_1 = kappa.p is INF or kappa.p > 1
    q_finite = kappa.q is not INF
    return Regime(
        smoothness=s,
        degenerate=c > 0,
        maximal=c == 0,
        duality_valid=q_gt_1 and c <= 0,
        two_stars_valid=p_gt_1 and q_gt_1 and q_finite and c < 0,
    )
