"""Dyadic cubes of ``[0,1]^d``, the 2^d-ary cube tree and packings (antichains)."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "DyadicCube",
    "Packing",
    "children",
    "mesh",
    "is_packing",
    "enumerate_packings",
    "count_packings",
    "uniform_packing",
    "random_packing",
    "packing_membership",
]

MAX_ENUMERATION_LEAVES = 4096


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The cube ``prod_i [index_i 2^-level, (index_i + 1) 2^-level]``."""

    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        index = tuple(int(i) for i in self.index)
        if not index:
            raise ValueError("index must have at least one coordinate")
        side = 1 << self.level
        if any(i < 0 or i >= side for i in index):
            raise ValueError(f"index {index} out of range for level {self.level}")
        object.__setattr__(self, "index", index)

    @classmethod
    def root(cls, d: int) -> "DyadicCube":
        return cls(0, (0,) * d)

    @property
    def d(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.level * self.d)

    def bounds(self) -> list[tuple[float, float]]:
        h = self.side
        return [(i * h, (i + 1) * h) for i in self.index]

    def children(self) -> list["DyadicCube"]:
        base = tuple(2 * i for i in self.index)
        return [
            DyadicCube(self.level + 1, tuple(b + o for b, o in zip(base, offs)))
            for offs in itertools.product((0, 1), repeat=self.d)
        ]

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise ValueError("the root cube has no parent")
        return DyadicCube(self.level - 1, tuple(i // 2 for i in self.index))

    def ancestors(self) -> Iterator["DyadicCube"]:
        cube = self
        while cube.level > 0:
            cube = cube.parent()
            yield cube

    def contains(self, other: "DyadicCube") -> bool:
        """True when ``other`` equals this cube or is one of its descendants."""
        if other.level < self.level or other.d != self.d:
            return False
        shift = other.level - self.level
        return all((j >> shift) == i for i, j in zip(self.index, other.index))

    def overlaps(self, other: "DyadicCube") -> bool:
        return self.contains(other) or other.contains(self)

    def cell_slices(self, m: int) -> tuple[slice, ...]:
        """Index slices of the cells of a resolution-``m`` grid covered by the cube."""
        if self.level > m:
            raise ValueError(f"cube at level {self.level} is finer than the grid (m={m})")
        width = 1 << (m - self.level)
        return tuple(slice(i * width, (i + 1) * width) for i in self.index)

    def to_json(self) -> list:
        return [self.level, list(self.index)]

    @classmethod
    def from_json(cls, data) -> "DyadicCube":
        level, index = data
        return cls(int(level), tuple(index))


def children(cube: DyadicCube) -> list[DyadicCube]:
    return cube.children()


def is_packing(cubes: Iterable[DyadicCube]) -> bool:
    """True iff no cube of the family contains another (an antichain)."""
    cubes = list(cubes)
    seen = set(cubes)
    if len(seen) != len(cubes):
        return False
    return not any(anc in seen for cube in cubes for anc in cube.ancestors())


class Packing:
    """A finite family of pairwise nonoverlapping dyadic cubes."""

    __slots__ = ("cubes",)

    def __init__(self, cubes: Iterable[DyadicCube] = ()):
        cubes = tuple(cubes)
        if len({c.d for c in cubes}) > 1:
            raise ValueError("cubes of a packing must share the dimension")
        if not is_packing(cubes):
            raise ValueError("cubes overlap: not a packing")
        self.cubes = cubes

    @classmethod
    def _trusted(cls, cubes: tuple) -> "Packing":
        obj = object.__new__(cls)
        obj.cubes = cubes
        return obj

    def __iter__(self):
        return iter(self.cubes)

    def __len__(self) -> int:
        return len(self.cubes)

    def __contains__(self, cube) -> bool:
        return cube in self.cubes

    def __eq__(self, other) -> bool:
        return isinstance(other, Packing) and sorted(self.cubes) == sorted(other.cubes)

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.cubes)))

    def __repr__(self) -> str:
        inner = ", ".join(f"({c.level}, {c.index})" for c in self.cubes)
        return f"Packing([{inner}])"

    @property
    def max_level(self) -> int:
        return max((c.level for c in self.cubes), default=0)

    def to_json(self) -> str:
        return json.dumps([c.to_json() for c in self.cubes])

    @classmethod
    def from_json(cls, text: str) -> "Packing":
        return cls(DyadicCube.from_json(item) for item in json.loads(text))


def mesh(pi: Packing | Sequence[DyadicCube]) -> float:
    """Largest cube volume in the packing; the empty packing has mesh 0."""
    return max((c.volume for c in pi), default=0.0)


def count_packings(d: int, max_level: int) -> int:
    """Number of antichains (empty one included) of the depth-``max_level`` tree."""
    a = 2
    for _ in range(max_level):
        a = 1 + a ** (2**d)
    return a


def _antichains(cube: DyadicCube, depth: int) -> list[tuple]:
    if depth == 0:
        return [(cube,), ()]
    per_child = [_antichains(c, depth - 1) for c in cube.children()]
    out = [(cube,)]
    for combo in itertools.product(*per_child):
        out.append(tuple(itertools.chain.from_iterable(combo)))
    return out


def enumerate_packings(d: int, max_level: int) -> Iterator[Packing]:
    """Yield every antichain of cubes with level ``<= max_level`` exactly once.

    The order is fixed: a cube's own singleton comes first, followed by the
    cartesian product of its children's antichains (first child slowest).
    """
    if 2 ** (d * max_level) > MAX_ENUMERATION_LEAVES:
        raise ValueError(
            f"enumeration refused: 2^(d*max_level) = {2 ** (d * max_level)} leaves "
            f"exceeds the guard of {MAX_ENUMERATION_LEAVES}"
        )
    root = DyadicCube.root(d)
    if max_level == 0:
        yield Packing._trusted((root,))
        yield Packing._trusted(())
        return
    per_child = [_antichains(c, max_level - 1) for c in root.children()]
    yield Packing._trusted((root,))
    for combo in itertools.product(*per_child):
        yield Packing._trusted(tuple(itertools.chain.from_iterable(combo)))


def uniform_packing(d: int, level: int) -> Packing:
    """All ``2^(level*d)`` cubes of one level."""
    n = 1 << level
    return Packing._trusted(
        tuple(DyadicCube(level, idx) for idx in itertools.product(range(n), repeat=d))
    )


def random_packing(d: int, max_level: int, rng: np.random.Generator, stop: float = 0.35,
                   drop: float = 0.2) -> Packing:
    """Sample a random antichain by a stochastic descent of the cube tree."""
    cubes = []

    def visit(cube: DyadicCube):
        if cube.level == max_level or rng.random() < stop:
            if rng.random() >= drop:
                cubes.append(cube)
            return
        for c in cube.children():
            visit(c)

    visit(DyadicCube.root(d))
    return Packing._trusted(tuple(cubes))


def packing_membership(packings: Sequence[Packing], d: int, max_level: int) -> list[np.ndarray]:
    """Boolean selection masks per level, shape ``(len(packings),) + (2^level,)*d``."""
    rows = [[] for _ in range(max_level + 1)]
    flat = [[] for _ in range(max_level + 1)]
    for row, pi in enumerate(packings):
        for cube in pi:
            if cube.level > max_level:
                raise ValueError(f"cube level {cube.level} exceeds max_level {max_level}")
            idx = 0
            for i in cube.index:
                idx = (idx << cube.level) | i
            rows[cube.level].append(row)
            flat[cube.level].append(idx)
    masks = []
    for level in range(max_level + 1):
        mask = np.zeros((len(packings), 1 << (level * d)), dtype=bool)
        mask[np.asarray(rows[level], dtype=np.intp), np.asarray(flat[level], dtype=np.intp)] = True
        masks.append(mask.reshape((len(packings),) + (1 << level,) * d))
    return masks
