"""Piecewise-constant functions on the uniform dyadic grid of ``[0,1]^d``.

A :class:`GridFunction` of resolution ``m`` stores one value per cell of the
``2^m x ... x 2^m`` grid.  All integrals below are exact for these
representatives: norms, pairings and cell averages involve no quadrature.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .dyadic import DyadicCube
from .params import INF, ext_real

__all__ = [
    "GridFunction",
    "lq_norm",
    "pair",
    "cell_average",
    "sample",
    "project_monomial",
    "save",
    "load",
    "from_csv",
    "atomic_write",
]

MAGIC = b"BVGF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class GridFunction:
    """Immutable piecewise-constant function on a uniform dyadic grid.

    Parameters
    ----------
    values : array_like
        ``d``-dimensional array with every side equal to ``2^m``.
    """

    __slots__ = ("_values", "d", "m")

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim == 0:
            raise ValueError("values must have at least one dimension")
        n = arr.shape[0]
        if any(s != n for s in arr.shape) or n < 1 or n & (n - 1):
            raise ValueError(f"grid sides must be equal powers of two, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid values must be finite")
        arr.setflags(write=False)
        self._values = arr
        self.d = arr.ndim
        self.m = n.bit_length() - 1

    @classmethod
    def constant(cls, d: int, m: int, c: float = 1.0) -> "GridFunction":
        return cls(np.full((1 << m,) * d, float(c)))

    @classmethod
    def zeros(cls, d: int, m: int) -> "GridFunction":
        return cls.constant(d, m, 0.0)

    @classmethod
    def from_flat(cls, d: int, m: int, flat) -> "GridFunction":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != 1 << (m * d):
            raise ValueError(f"expected {1 << (m * d)} values, got {flat.size}")
        return cls(flat.reshape((1 << m,) * d))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        """Cells per side."""
        return 1 << self.m

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.m * self.d)

    @property
    def shape(self) -> tuple:
        return self._values.shape

    def flat(self) -> np.ndarray:
        return self._values.reshape(-1)

    def block(self, cube: Optional[DyadicCube]) -> np.ndarray:
        """View of the cell values inside ``cube`` (whole grid for ``None``)."""
        if cube is None:
            return self._values
        if cube.d != self.d:
            raise ValueError(f"cube dimension {cube.d} does not match grid dimension {self.d}")
        return self._values[cube.cell_slices(self.m)]

    def restrict(self, cube: DyadicCube) -> "GridFunction":
        """Zero outside ``cube``, unchanged inside."""
        out = np.zeros_like(self._values)
        sl = cube.cell_slices(self.m)
        out[sl] = self._values[sl]
        return GridFunction(out)

    def refine(self, times: int = 1) -> "GridFunction":
        """Exact duplication onto a grid ``times`` levels finer."""
        arr = self._values
        for axis in range(self.d):
            arr = np.repeat(arr, 1 << times, axis=axis)
        return GridFunction(arr)

    def coarsen_to(self, m: int) -> "GridFunction":
        """Cell averages on a coarser grid (used for display, not for resampling)."""
        if m > self.m:
            raise ValueError("coarsen_to needs a coarser resolution")
        b = 1 << (self.m - m)
        n = 1 << m
        arr = self._values.reshape(sum(((n, b) for _ in range(self.d)), ()))
        return GridFunction(arr.mean(axis=tuple(range(1, 2 * self.d, 2))))

    def _check_compatible(self, other: "GridFunction") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_compatible(other)
        return GridFunction(self._values + other._values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_compatible(other)
        return GridFunction(self._values - other._values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self._values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self._values)

    def __eq__(self, other) -> bool:
        return isinstance(other, GridFunction) and np.array_equal(self._values, other._values)

    __hash__ = None

    def __repr__(self) -> str:
        return f"GridFunction(d={self.d}, m={self.m})"


def _norm_of_block(block: np.ndarray, q, cell_volume: float) -> float:
    q = ext_real(q)
    if q is INF:
        return float(np.max(np.abs(block))) if block.size else 0.0
    if q < 1:
        raise ValueError(f"q must lie in [1, inf], got {q}")
    a = np.abs(block)
    if q == 1:
        return float(a.sum() * cell_volume)
    if q == 2:
        return float(np.sqrt(np.vdot(a, a) * cell_volume))
    qf = float(q)
    top = a.max() if a.size else 0.0
    if top == 0.0:
        return 0.0
    # scale first so large exponents do not overflow
    return float(top * ((a / top) ** qf).sum() ** (1.0 / qf) * cell_volume ** (1.0 / qf))


def lq_norm(f: GridFunction, q=2, region: Optional[DyadicCube] = None) -> float:
    """Exact ``L_q`` norm of ``f`` over ``region`` (the whole cube when ``None``)."""
    return _norm_of_block(f.block(region), q, f.cell_volume)


def pair(f: GridFunction, g: GridFunction) -> float:
    """Exact ``integral f g dx``."""
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    return float(np.vdot(f.values, g.values) * f.cell_volume)


def cell_average(f: GridFunction, cube: DyadicCube) -> float:
    return float(f.block(cube).mean())


def _cell_coordinates(d: int, m: int, supersample: int) -> list[np.ndarray]:
    n = (1 << m) * supersample
    centers = (np.arange(n) + 0.5) / n
    return np.meshgrid(*([centers] * d), indexing="ij", sparse=True)


def sample(fn: Callable[..., np.ndarray], d: int, m: int, supersample: int = 1) -> GridFunction:
    """Average ``fn`` over a ``supersample^d`` lattice of sub-cell centres per cell.

    ``fn`` receives ``d`` broadcastable coordinate arrays and must be vectorised.
    """
    if supersample < 1:
        raise ValueError("supersample must be a positive integer")
    coords = _cell_coordinates(d, m, supersample)
    fine = np.broadcast_to(np.asarray(fn(*coords), dtype=np.float64), ((1 << m) * supersample,) * d)
    if supersample == 1:
        return GridFunction(fine)
    n = 1 << m
    arr = fine.reshape(sum(((n, supersample) for _ in range(d)), ()))
    return GridFunction(arr.mean(axis=tuple(range(1, 2 * d, 2))))


def _monomial_cell_averages(n: int, power: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Exact averages of ``t^power`` over the ``n`` equal cells of ``[lo, hi]``."""
    edges = np.linspace(lo, hi, n + 1)
    a, b = edges[:-1], edges[1:]
    if power == 0:
        return np.ones(n)
    return (b ** (power + 1) - a ** (power + 1)) / ((power + 1) * (b - a))


def project_monomial(d: int, m: int, alpha, scale: float = 1.0) -> GridFunction:
    """Exact cell averages of ``scale * x^alpha`` on the resolution-``m`` grid."""
    alpha = tuple(alpha)
    if len(alpha) != d:
        raise ValueError("multi-index length must equal d")
    n = 1 << m
    out = np.array(scale, dtype=np.float64)
    for axis, a in enumerate(alpha):
        shape = [1] * d
        shape[axis] = n
        out = out * _monomial_cell_averages(n, a).reshape(shape)
    return GridFunction(np.broadcast_to(out, (n,) * d))


def atomic_write(path, data: bytes | str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(f: GridFunction, path) -> None:
    """Store ``f`` as a headered little-endian float64 blob plus ``<path>.json``."""
    path = Path(path)
    payload = _HEADER.pack(MAGIC, FORMAT_VERSION, f.d, f.m) + f.flat().astype("<f8").tobytes()
    sidecar = {"format": "bvkit-grid", "version": FORMAT_VERSION, "d": f.d, "m": f.m,
               "dtype": "float64", "byte_order": "little", "order": "C", "count": int(f.flat().size)}
    atomic_write(path, payload)
    atomic_write(Path(str(path) + ".json"), json.dumps(sidecar, indent=2) + "\n")


def load(path) -> GridFunction:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: file too short for a grid header")
    magic, version, d, m = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        if (meta.get("d"), meta.get("m")) != (d, m):
            raise ValueError(f"{path}: sidecar (d, m) disagrees with the header")
    return GridFunction.from_flat(d, m, body)


def from_csv(path) -> GridFunction:
    """One-dimensional import: one value per row, optional non-numeric header row."""
    values = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if i == 0:
                    continue
                raise
    n = len(values)
    if n < 1 or n & (n - 1):
        raise ValueError(f"{path}: row count {n} is not a power of two")
    return GridFunction(np.array(values))
