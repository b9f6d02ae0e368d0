"""
Generalized dyadic cubes and finite-resolution cube sets.

A tree is assembled from one-dimensional "axes": every torus coordinate is a
b-adic circle, a symbolic or Cantor factor is a single cylinder axis, and a
product space chains the axes of its factors. A level-n cube is one cell per
axis; its flat index interleaves the per-level axis digits so that the
parent of index i is ``i // branching``. Every level-n cube has measure
``branching ** -n``.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.logging_config import get_logger
from lab.errors import InvalidInputError, InvalidParameterError, ResolutionExceededError
from lab.spaces import (
    Ball,
    CantorSpace,
    ProductSpace,
    SpaceDescriptor,
    SymbolicSpace,
    TorusSpace,
)
from utils.rng import TAG_AUDIT, stream

logger = get_logger(__name__)

DEFAULT_MAX_LEVEL = 14
CANTOR_LEVEL_CAP = 30
INDEX_LIMIT = 2 ** 62
EXHAUSTIVE_CUBES = 4096
BALL_CHUNK = 4096


def _expand(counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(owner, offset) pairs enumerating ``range(counts[i])`` for every i."""
    counts = np.asarray(counts, dtype=np.int64)
    owner = np.repeat(np.arange(counts.size, dtype=np.int64), counts)
    starts = np.cumsum(counts) - counts
    offsets = np.arange(owner.size, dtype=np.int64) - np.repeat(starts, counts)
    return owner, offsets


def _digits_to_index(digits: np.ndarray, base: int, level: int) -> np.ndarray:
    index = np.zeros(digits.shape[:-1], dtype=np.int64)
    for col in range(level):
        index = index * base + digits[..., col].astype(np.int64)
    return index


def _index_to_digits(index: np.ndarray, base: int, level: int, depth: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    digits = np.zeros(index.shape + (depth,), dtype=np.int64)
    rest = index.copy()
    for col in range(level - 1, -1, -1):
        digits[..., col] = rest % base
        rest //= base
    return digits


class _CircleAxis:
    """b-adic half-open cells on R/Z with centers at a fixed offset of the cell."""

    def __init__(self, k: int, offset: float):
        self.k = k
        self.branching = k
        self.offset = offset

    def cells(self, level: int) -> int:
        return self.k ** level

    def locate(self, coord, level):
        K = self.cells(level)
        return np.floor(np.asarray(coord, dtype=float) * K).astype(np.int64) % K

    def centers(self, index, level):
        return ((np.asarray(index, dtype=float) + self.offset) / self.cells(level)) % 1.0

    def distance(self, a, c):
        diff = np.abs(np.asarray(a, dtype=float) - np.asarray(c, dtype=float)) % 1.0
        return np.minimum(diff, 1.0 - diff)

    def sample(self, index, level, rng):
        index = np.asarray(index, dtype=float)
        return ((index + rng.random(index.shape)) / self.cells(level)) % 1.0

    def candidates(self, coord, radius, level):
        K = self.cells(level)
        u = np.asarray(coord, dtype=float) * K - self.offset
        span = np.asarray(radius, dtype=float) * K
        lo = np.floor(u - span).astype(np.int64)
        hi = np.ceil(u + span).astype(np.int64)
        width = np.where(radius > 0, hi - lo + 1, 0)
        full = width >= K
        lo = np.where(full, 0, lo)
        width = np.where(full, K, width)
        owner, offsets = _expand(width)
        index = (lo[owner] + offsets) % K
        keep = self.distance(coord[owner], self.centers(index, level)) < radius[owner]
        return owner[keep], index[keep]

    def diameter(self, index, level):
        K = self.cells(level)
        starts = np.unique(np.asarray(index, dtype=np.int64) % K)
        if starts.size == K:
            return 0.5
        antipode = starts.astype(float) + K / 2.0
        sorted_starts = starts.astype(float)
        pos = np.searchsorted(sorted_starts, antipode % K)
        right = sorted_starts[pos % starts.size]
        left = sorted_starts[(pos - 1) % starts.size]
        gap_r = np.abs(right - antipode % K) % K
        gap_l = np.abs(antipode % K - left) % K
        near = np.minimum(np.minimum(gap_r, K - gap_r), np.minimum(gap_l, K - gap_l))
        clearance = np.maximum(near - 1.0, 0.0)
        return float(0.5 - clearance.min() / K)


class _CylinderAxis:
    """Cylinders of a symbolic space; cube centers are the path followed by zeros."""

    def __init__(self, space: SymbolicSpace):
        self.space = space
        self.branching = space.m

    def locate(self, coord, level):
        return _digits_to_index(np.asarray(coord), self.space.m, level)

    def centers(self, index, level):
        return _index_to_digits(index, self.space.m, level, self.space.depth)

    def distance(self, a, c):
        return self.space.distance(a, c)

    def sample(self, index, level, rng):
        digits = self.centers(index, level)
        tail = rng.integers(0, self.space.m, size=digits.shape, dtype=np.int64)
        keep = np.arange(self.space.depth) < level
        return np.where(keep, digits, tail)

    def candidates(self, coord, radius, level):
        coord = np.asarray(coord)
        m = self.space.m
        k0 = self.space.ball_depth(radius)
        full_index = self.locate(coord, level)
        ranged = k0 <= level
        shift = level - np.minimum(k0, level)
        block = np.power(np.int64(m), shift)
        start_ranged = (full_index // block) * block
        cols = np.arange(self.space.depth)
        tail_window = (cols[None, :] >= level) & (cols[None, :] < k0[:, None])
        tail_clear = ~np.any(tail_window & (coord != 0), axis=-1)
        width = np.where(ranged, block, tail_clear.astype(np.int64))
        width = np.where(radius > 0, width, 0)
        start = np.where(ranged, start_ranged, full_index)
        owner, offsets = _expand(width)
        return owner, start[owner] + offsets

    def diameter(self, index, level):
        index = np.asarray(index, dtype=np.int64)
        lo = self.centers(index.min(), level)
        hi = self.centers(index.max(), level)
        mismatch = np.flatnonzero(lo[:level] != hi[:level])
        common = int(mismatch[0]) if mismatch.size else level
        return self.space.b ** common


class _CantorAxis:
    """Binary cylinders of the middle-third Cantor set; centers are left endpoints."""

    def __init__(self, space: CantorSpace):
        self.space = space
        self.branching = 2

    def locate(self, coord, level):
        return _digits_to_index(np.asarray(coord), 2, level)

    def centers(self, index, level):
        return _index_to_digits(index, 2, level, self.space.depth)

    def center_values(self, index, level):
        index = np.asarray(index, dtype=np.int64)
        value = np.zeros(index.shape)
        for col in range(level):
            bit = (index >> (level - 1 - col)) & 1
            value += bit * 2.0 * 3.0 ** -(col + 1)
        return value

    def distance(self, a, c):
        return self.space.distance(a, c)

    def sample(self, index, level, rng):
        digits = self.centers(index, level)
        tail = rng.integers(0, 2, size=digits.shape, dtype=np.int64)
        return np.where(np.arange(self.space.depth) < level, digits, tail)

    @staticmethod
    def starts_below(y, level):
        """Number of level-n left endpoints strictly below y."""
        y = np.asarray(y, dtype=float)
        count = np.where(y > 1.0, 2 ** level, 0).astype(np.int64)
        active = (y > 0.0) & (y <= 1.0)
        cur = np.clip(y, 0.0, 1.0)
        for col in range(level):
            block = 2 ** (level - 1 - col)
            y3 = 3.0 * cur
            mid = active & (y3 >= 1.0) & (y3 < 2.0)
            right = active & (y3 >= 2.0)
            count += np.where(mid | right, block, 0)
            active &= ~mid
            cur = np.where(right, y3 - 2.0, y3)
        return count + (active & (cur > 0.0))

    def candidates(self, coord, radius, level):
        v = self.space.values(coord)
        top = 2 ** level - 1
        lo = np.clip(self.starts_below(v - radius, level) - 1, 0, top)
        hi = np.clip(self.starts_below(v + radius, level), 0, top)
        width = np.where(radius > 0, np.maximum(hi - lo + 1, 0), 0)
        owner, offsets = _expand(width)
        index = lo[owner] + offsets
        keep = np.abs(self.center_values(index, level) - v[owner]) < radius[owner]
        return owner[keep], index[keep]

    def diameter(self, index, level):
        values = self.center_values(np.asarray(index, dtype=np.int64), level)
        return float(values.max() + 3.0 ** -level - values.min())


@dataclass
class _Layout:
    axes: List[Any]
    split: Callable[[Any], List[Any]]
    join: Callable[[List[Any]], Any]
    factor_of_axis: List[int]


def _layout_for(space: SpaceDescriptor, b: float) -> _Layout:
    if isinstance(space, TorusSpace):
        k = int(round(1.0 / b))
        offset = 0.5 if k == 2 else ((k - 1) // 2) / (k - 1)
        d = space.d
        return _Layout(
            axes=[_CircleAxis(k, offset) for _ in range(d)],
            split=lambda x: [np.asarray(x, dtype=float)[..., i] for i in range(d)],
            join=lambda cs: np.stack(cs, axis=-1),
            factor_of_axis=[0] * d,
        )
    if isinstance(space, SymbolicSpace):
        return _Layout([_CylinderAxis(space)], lambda x: [np.asarray(x)], lambda cs: cs[0], [0])
    if isinstance(space, CantorSpace):
        return _Layout([_CantorAxis(space)], lambda x: [np.asarray(x)], lambda cs: cs[0], [0])
    if isinstance(space, ProductSpace):
        parts = [_layout_for(f, b) for f in space.factors]
        sizes = [len(p.axes) for p in parts]

        def split(x):
            coords = []
            for part, xi in zip(parts, x):
                coords.extend(part.split(xi))
            return coords

        def join(coords):
            out, pos = [], 0
            for part, n in zip(parts, sizes):
                out.append(part.join(coords[pos:pos + n]))
                pos += n
            return tuple(out)

        return _Layout(
            axes=[a for p in parts for a in p.axes],
            split=split,
            join=join,
            factor_of_axis=[i for i, n in enumerate(sizes) for _ in range(n)],
        )
    raise InvalidParameterError(f'no cube structure for space {space}')


def default_ratio(space: SpaceDescriptor) -> float:
    """Natural cell ratio of a space: 1/2 on tori, b for symbolic, 1/3 for cantor3."""
    if isinstance(space, SymbolicSpace):
        return space.b
    if isinstance(space, CantorSpace):
        return 1.0 / 3.0
    if isinstance(space, ProductSpace):
        return default_ratio(space.factors[0])
    return 0.5


def _check_ratio(space: SpaceDescriptor, b: float) -> None:
    if isinstance(space, TorusSpace):
        k = round(1.0 / b)
        if k < 2 or abs(1.0 / k - b) > 1e-12:
            raise InvalidParameterError('torus cubes need b = 1/k for an integer k >= 2', b=b)
    elif isinstance(space, SymbolicSpace):
        if abs(b - space.b) > 1e-12:
            raise InvalidParameterError(f'{space.name} cylinders have ratio {space.b:g}', b=b)
    elif isinstance(space, CantorSpace):
        if abs(b - 1.0 / 3.0) > 1e-12:
            raise InvalidParameterError('cantor3 cylinders have ratio 1/3', b=b)
    elif isinstance(space, ProductSpace):
        for factor in space.factors:
            _check_ratio(factor, b)


def _exact_constants(space: SpaceDescriptor, b: float) -> Tuple[float, float]:
    if isinstance(space, TorusSpace):
        return 0.5, 0.5
    if isinstance(space, SymbolicSpace):
        return 1.0 / b, 1.0
    if isinstance(space, CantorSpace):
        return 1.0, 1.0
    pairs = [_exact_constants(f, b) for f in space.factors]
    return min(p[0] for p in pairs), max(p[1] for p in pairs)


def sandwich_constants(space: SpaceDescriptor, b: float) -> Tuple[float, float]:
    """(c1, c1') with B(x_Q, c1 b^n) inside Q inside closed-B(x_Q, c1' b^n)."""
    if b < 1.0 / 3.0:
        return 0.5 - b / (1.0 - b), 1.0 / (1.0 - b)
    return _exact_constants(space, b)


@dataclass(frozen=True)
class CubeId:
    """A cube addressed by its digit path from the root."""

    level: int
    path: Tuple[int, ...]

    def __post_init__(self):
        if len(self.path) != self.level:
            raise InvalidInputError('cube path length must equal its level',
                                    level=self.level, path=list(self.path))

    def parent(self) -> 'CubeId':
        if self.level == 0:
            raise InvalidInputError('the root cube has no parent')
        return CubeId(self.level - 1, self.path[:-1])

    def label(self, branching: int) -> str:
        if self.level == 0:
            return '-'
        sep = '' if branching <= 10 else '.'
        return sep.join(str(d) for d in self.path)


@dataclass(eq=False)
class CubeTree:
    """Nested partitions Q_n of a model space for 0 <= n <= max_level."""

    space: SpaceDescriptor
    b: float
    max_level: int
    c1: float
    c1_prime: float
    layout: _Layout = field(repr=False)

    @property
    def axes(self) -> List[Any]:
        return self.layout.axes

    @property
    def branching(self) -> int:
        return int(np.prod([a.branching for a in self.axes]))

    @property
    def centers_nest(self) -> bool:
        return not any(isinstance(a, _CircleAxis) and a.k == 2 for a in self.axes)

    def count(self, level: int) -> int:
        return self.branching ** level

    def cube_measure(self, level: int) -> float:
        return float(self.branching) ** -level

    def check_level(self, level: int) -> None:
        if level < 0:
            raise InvalidInputError('cube levels are nonnegative', level=level)
        if level > self.max_level:
            raise ResolutionExceededError(f'level {level} exceeds tree max level {self.max_level}',
                                          level=level, max_level=self.max_level)

    def _interleave(self, parts: Sequence[np.ndarray], level: int) -> np.ndarray:
        if len(parts) == 1:
            return np.asarray(parts[0], dtype=np.int64)
        beta = self.branching
        out = np.zeros(np.shape(parts[0]), dtype=np.int64)
        for col in range(level):
            shift = level - 1 - col
            digit = np.zeros_like(out)
            mult = 1
            for part, axis in zip(parts, self.axes):
                k = axis.branching
                digit += ((np.asarray(part) // k ** shift) % k) * mult
                mult *= k
            out = out * beta + digit
        return out

    def _deinterleave(self, index: np.ndarray, level: int) -> List[np.ndarray]:
        index = np.asarray(index, dtype=np.int64)
        if len(self.axes) == 1:
            return [index]
        beta = self.branching
        parts = [np.zeros_like(index) for _ in self.axes]
        for col in range(level):
            code = (index // beta ** (level - 1 - col)) % beta
            for a, axis in enumerate(self.axes):
                k = axis.branching
                parts[a] = parts[a] * k + code % k
                code = code // k
        return parts

    def locate(self, points, level: int) -> np.ndarray:
        """Flat indices of the level-n cubes containing a batch of points."""
        self.check_level(level)
        coords = self.layout.split(points)
        parts = [axis.locate(c, level) for axis, c in zip(self.axes, coords)]
        return self._interleave(parts, level)

    def cube_containing(self, x, level: int) -> 'CubeId':
        """The unique level-n cube containing the single point x."""
        self.space.check_point(x)
        index = int(np.asarray(self.locate(x, level)).reshape(-1)[0])
        return self.cube_id(level, index)

    def centers(self, level: int, indices) -> Any:
        """Center points x_{n,i} for a batch of flat indices."""
        self.check_level(level)
        parts = self._deinterleave(np.asarray(indices, dtype=np.int64), level)
        return self.layout.join([axis.centers(p, level) for axis, p in zip(self.axes, parts)])

    def sample_in_cubes(self, level: int, indices, rng: np.random.Generator) -> Any:
        """One mu-distributed point inside each listed cube."""
        parts = self._deinterleave(np.asarray(indices, dtype=np.int64), level)
        return self.layout.join([axis.sample(p, level, rng) for axis, p in zip(self.axes, parts)])

    def root_center(self) -> Any:
        """x0: the center of the level-0 cube."""
        return self.space.take(self.centers(0, np.zeros(1, dtype=np.int64)), 0)

    def cube_id(self, level: int, index: int) -> CubeId:
        path, rest = [], int(index)
        for _ in range(level):
            path.append(rest % self.branching)
            rest //= self.branching
        return CubeId(level, tuple(reversed(path)))

    def index_of(self, cube: CubeId) -> int:
        index = 0
        for digit in cube.path:
            if not 0 <= digit < self.branching:
                raise InvalidInputError('cube path digit out of range', digit=digit)
            index = index * self.branching + digit
        return index

    def parse_label(self, label: str, level: int) -> CubeId:
        if label == '-':
            return CubeId(0, ())
        digits = label.split('.') if self.branching > 10 else list(label)
        return CubeId(level, tuple(int(d) for d in digits))

    def candidates(self, centers, radii: Sequence[np.ndarray], level: int) -> Tuple[np.ndarray, np.ndarray]:
        """(ball, cube) pairs with rho_axis(x, x_Q) < radii[axis] on every axis."""
        coords = self.layout.split(centers)
        per_axis = [axis.candidates(np.asarray(c), np.asarray(r, dtype=float), level)
                    for axis, c, r in zip(self.axes, coords, radii)]
        if len(per_axis) == 1:
            return per_axis[0]
        n = np.asarray(radii[0]).shape[0]
        counts = [np.bincount(owner, minlength=n) for owner, _ in per_axis]
        orders = [np.argsort(owner, kind='stable') for owner, _ in per_axis]
        starts = [np.cumsum(c) - c for c in counts]
        total = np.prod(np.stack(counts), axis=0)
        owner, offsets = _expand(total)
        parts = []
        rest = offsets
        for (axis_owner, axis_index), c, order, start in zip(per_axis, counts, orders, starts):
            pick = rest % np.maximum(c[owner], 1)
            rest = rest // np.maximum(c[owner], 1)
            parts.append(axis_index[order][start[owner] + pick])
        return owner, self._interleave(parts, level)


def build_tree(space: SpaceDescriptor, b: Optional[float] = None,
               max_level: int = DEFAULT_MAX_LEVEL) -> CubeTree:
    """Build the cube hierarchy of a model space.

    Tori use b-adic half-open boxes (b = 1/k), symbolic and Cantor spaces use
    their cylinders, products use products of factor cubes at a common ratio.
    """
    ratio = default_ratio(space) if b is None else float(b)
    if not 0.0 < ratio < 1.0:
        raise InvalidParameterError('cube ratio b must lie in (0, 1)', b=ratio)
    _check_ratio(space, ratio)
    if max_level < 0:
        raise InvalidParameterError('max level must be nonnegative', max_level=max_level)
    layout = _layout_for(space, ratio)
    for axis in layout.axes:
        if isinstance(axis, _CylinderAxis) and max_level > axis.space.depth:
            raise InvalidParameterError('max level exceeds symbolic working depth',
                                        max_level=max_level, depth=axis.space.depth)
        if isinstance(axis, _CantorAxis) and max_level > min(axis.space.depth, CANTOR_LEVEL_CAP):
            raise InvalidParameterError('max level exceeds cantor3 working precision',
                                        max_level=max_level)
    branching = int(np.prod([a.branching for a in layout.axes]))
    if max_level * math.log(branching) >= math.log(INDEX_LIMIT):
        raise InvalidParameterError('cube count at max level overflows 64-bit indices',
                                    max_level=max_level, branching=branching)
    c1, c1_prime = sandwich_constants(space, ratio)
    tree = CubeTree(space, ratio, max_level, c1, c1_prime, layout)
    logger.debug(f'built cube tree on {space.name}: b={ratio:g} max_level={max_level} '
                 f'branching={branching} c1={c1:g} c1prime={c1_prime:g}')
    return tree


def cube_containing(tree: CubeTree, x, n: int) -> CubeId:
    return tree.cube_containing(x, n)


class CubeSet:
    """A union of level-N cubes, stored as sorted unique flat indices."""

    __slots__ = ('tree', 'level', 'indices')

    def __init__(self, tree: CubeTree, level: int, indices=None):
        tree.check_level(level)
        idx = np.unique(np.asarray([] if indices is None else indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= tree.count(level)):
            raise InvalidInputError('cube index out of range for level', level=level)
        self.tree = tree
        self.level = level
        self.indices = idx

    @classmethod
    def empty(cls, tree: CubeTree, level: int) -> 'CubeSet':
        return cls(tree, level)

    @classmethod
    def full(cls, tree: CubeTree, level: int) -> 'CubeSet':
        tree.check_level(level)
        return cls(tree, level, np.arange(tree.count(level), dtype=np.int64))

    @classmethod
    def from_ids(cls, tree: CubeTree, cubes: Sequence[CubeId]) -> 'CubeSet':
        levels = {c.level for c in cubes}
        if len(levels) > 1:
            raise InvalidInputError('cube set members must share one level', levels=sorted(levels))
        level = levels.pop() if levels else 0
        return cls(tree, level, [tree.index_of(c) for c in cubes])

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CubeSet) or other.tree is not self.tree:
            return NotImplemented
        a, b = _aligned(self, other)
        return bool(np.array_equal(a.indices, b.indices))

    __hash__ = None

    def __repr__(self) -> str:
        return f'CubeSet(level={self.level}, cubes={len(self)}, measure={self.measure:.6g})'

    @property
    def measure(self) -> float:
        return len(self) * self.tree.cube_measure(self.level)

    def is_empty(self) -> bool:
        return self.indices.size == 0

    def ids(self) -> List[CubeId]:
        return [self.tree.cube_id(self.level, int(i)) for i in self.indices]

    def refine(self, level: int) -> 'CubeSet':
        """The same set at a finer level."""
        if level < self.level:
            raise InvalidInputError('refine needs a level at least the current one',
                                    level=level, current=self.level)
        self.tree.check_level(level)
        if level == self.level:
            return self
        fan = self.tree.branching ** (level - self.level)
        children = (self.indices[:, None] * fan + np.arange(fan, dtype=np.int64)[None, :]).ravel()
        return CubeSet(self.tree, level, children)

    def ancestors(self, level: int) -> 'CubeSet':
        """Level-n cubes meeting this set (n at most the current level)."""
        if level > self.level:
            raise InvalidInputError('ancestors need a coarser level', level=level, current=self.level)
        fan = self.tree.branching ** (self.level - level)
        return CubeSet(self.tree, level, self.indices // fan)

    def union(self, other: 'CubeSet') -> 'CubeSet':
        a, b = _aligned(self, other)
        return CubeSet(self.tree, a.level, np.union1d(a.indices, b.indices))

    def intersect(self, other: 'CubeSet') -> 'CubeSet':
        a, b = _aligned(self, other)
        return CubeSet(self.tree, a.level, np.intersect1d(a.indices, b.indices, assume_unique=True))

    def difference(self, other: 'CubeSet') -> 'CubeSet':
        a, b = _aligned(self, other)
        return CubeSet(self.tree, a.level, np.setdiff1d(a.indices, b.indices, assume_unique=True))

    def complement(self, level: Optional[int] = None) -> 'CubeSet':
        base = self.refine(self.level if level is None else level)
        keep = np.ones(self.tree.count(base.level), dtype=bool)
        keep[base.indices] = False
        return CubeSet(self.tree, base.level, np.flatnonzero(keep))

    def issubset(self, other: 'CubeSet') -> bool:
        a, b = _aligned(self, other)
        return bool(np.isin(a.indices, b.indices, assume_unique=True).all())

    def contains(self, points) -> np.ndarray:
        located = self.tree.locate(points, self.level)
        return np.isin(located, self.indices)

    def centers(self) -> Any:
        return self.tree.centers(self.level, self.indices)

    def to_text(self) -> str:
        """Header line plus one sorted path label per line."""
        lines = [f'# space={self.tree.space.name} b={self.tree.b:.12g} level={self.level} '
                 f'count={len(self)}']
        lines.extend(self.tree.cube_id(self.level, int(i)).label(self.tree.branching)
                     for i in self.indices)
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, tree: CubeTree, text: str) -> 'CubeSet':
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith('#'):
            raise InvalidInputError('cube set text needs a header line')
        header = dict(tok.split('=', 1) for tok in lines[0][1:].split())
        if header.get('space') != tree.space.name:
            raise InvalidInputError('cube set belongs to another space',
                                    expected=tree.space.name, found=header.get('space'))
        level = int(header['level'])
        return cls.from_ids(tree, [tree.parse_label(ln, level) for ln in lines[1:]]) \
            if len(lines) > 1 else cls.empty(tree, level)


def _aligned(a: CubeSet, b: CubeSet) -> Tuple[CubeSet, CubeSet]:
    if a.tree is not b.tree:
        raise InvalidInputError('cube sets belong to different trees')
    level = max(a.level, b.level)
    return a.refine(level), b.refine(level)


def union_of_boxes(tree: CubeTree, centers, radii: Sequence[np.ndarray], level: int,
                   mode: str = 'outer') -> CubeSet:
    """Cube approximation of a union of boxes, one radius array per axis.

    Outer mode keeps cubes whose outer sandwich ball meets a box; inner mode
    keeps cubes whose outer sandwich ball lies inside one.
    """
    if mode not in ('inner', 'outer'):
        raise InvalidInputError(f'unknown conversion mode: {mode}')
    tree.check_level(level)
    slack = tree.c1_prime * tree.b ** level
    radii = [np.atleast_1d(np.asarray(r, dtype=float)) for r in radii]
    n = radii[0].shape[0]
    live = np.all(np.stack([r > 0 for r in radii]), axis=0)
    whole = np.all(np.stack([r > tree.space.diam for r in radii]), axis=0) & live
    if whole.any():
        return CubeSet.full(tree, level)
    sign = 1.0 if mode == 'outer' else -1.0
    thresholds = [np.where(live, r + sign * slack, 0.0) for r in radii]
    found = []
    for lo in range(0, n, BALL_CHUNK):
        sl = slice(lo, min(lo + BALL_CHUNK, n))
        chunk_centers = tree.space.take(centers, sl)
        _, cubes = tree.candidates(chunk_centers, [t[sl] for t in thresholds], level)
        found.append(np.unique(cubes))
    indices = np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.int64)
    return CubeSet(tree, level, indices)


def union_of_balls(tree: CubeTree, centers, radii, level: int, mode: str = 'outer') -> CubeSet:
    """Cube approximation of a union of balls B(centers[i], radii[i])."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    return union_of_boxes(tree, centers, [radii] * len(tree.axes), level, mode)


def factor_radii(tree: CubeTree, radii: Sequence) -> List[np.ndarray]:
    """Expand per-factor radii of a product space to per-axis radii."""
    return [np.atleast_1d(np.asarray(radii[f], dtype=float))
            for f in tree.layout.factor_of_axis]


def ball_to_cubeset(tree: CubeTree, ball: Ball, N: int, mode: str = 'outer') -> CubeSet:
    """Level-N cube approximation of a single ball."""
    if ball.radius <= 0:
        tree.check_level(N)
        return CubeSet.empty(tree, N)
    centers = _as_batch(tree.space, ball.center)
    return union_of_balls(tree, centers, [ball.radius], N, mode)


def _as_batch(space: SpaceDescriptor, x) -> Any:
    if isinstance(x, tuple):
        return tuple(np.asarray(part)[None, ...] for part in x)
    return np.asarray(x)[None, ...]


def cubeset_diameter(cubes: CubeSet) -> float:
    """Diameter of the closure of a cube set (max over axis projections)."""
    if cubes.is_empty():
        return 0.0
    tree = cubes.tree
    parts = tree._deinterleave(cubes.indices, cubes.level)
    return float(max(axis.diameter(p, cubes.level) for axis, p in zip(tree.axes, parts)))


@dataclass
class TreeAudit:
    """Outcome of `audit_tree`; a property is True, False or None (not applicable)."""

    space: str
    b: float
    levels: int
    properties: Dict[str, Optional[bool]]
    failures: List[str]

    @property
    def passed(self) -> bool:
        return all(v is not False for v in self.properties.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'space': self.space,
            'b': self.b,
            'levels': self.levels,
            'properties': dict(self.properties),
            'failures': list(self.failures[:20]),
            'passed': self.passed,
        }


def doubling_bound(tree: CubeTree) -> float:
    s = tree.space.s
    return tree.space.C ** 2 * (4.0 * tree.c1_prime / (tree.b * tree.c1)) ** s


def audit_tree(tree: CubeTree, seed: int = 0, levels: Optional[int] = None,
               samples_per_cube: int = 4, doubling_trials: int = 200) -> TreeAudit:
    """Check partition, nesting, sandwich, x0, center nesting, counts and doubling.

    Levels with at most EXHAUSTIVE_CUBES cubes are checked cube by cube; finer
    levels use a random sample of cubes.
    """
    top = tree.max_level if levels is None else min(levels, tree.max_level)
    rng = stream(seed, TAG_AUDIT, 1)
    space = tree.space
    failures: List[str] = []
    ok = {'partition': True, 'nesting': True, 'sandwich': True, 'root_point': True,
          'center_nesting': True if tree.centers_nest else None, 'counts': True,
          'doubling': True}
    shrink = 1.0 - 1e-9
    x0 = _as_batch(space, tree.root_center())
    for n in range(top + 1):
        count = tree.count(n)
        scale = tree.b ** n
        if count <= EXHAUSTIVE_CUBES:
            cubes = np.arange(count, dtype=np.int64)
        else:
            cubes = np.unique(rng.integers(0, count, size=EXHAUSTIVE_CUBES // 8))
        centers = tree.centers(n, cubes)

        if not np.array_equal(tree.locate(centers, n), cubes):
            ok['partition'] = False
            failures.append(f'level {n}: a center is not located in its own cube')

        reps = np.repeat(cubes, samples_per_cube)
        inside = tree.sample_in_cubes(n, reps, rng)
        if not np.array_equal(tree.locate(inside, n), reps):
            ok['partition'] = False
            failures.append(f'level {n}: sampled cube points located elsewhere')
        rep_centers = tree.centers(n, reps)
        if np.any(space.distance(inside, rep_centers) > tree.c1_prime * scale * (1 + 1e-9) + 1e-15):
            ok['sandwich'] = False
            failures.append(f'level {n}: cube leaves closed-B(x_Q, c1prime b^n)')
        near = space.sample_in_ball(rep_centers, np.full(reps.size, tree.c1 * scale * shrink), rng)
        if not np.array_equal(tree.locate(near, n), reps):
            ok['sandwich'] = False
            failures.append(f'level {n}: B(x_Q, c1 b^n) leaves its cube')

        if n < top:
            if not np.array_equal(tree.locate(inside, n + 1) // tree.branching, reps):
                ok['nesting'] = False
                failures.append(f'level {n}: child cube escapes its parent')
            if tree.centers_nest:
                child = tree.locate(centers, n + 1)
                gap = space.distance(tree.centers(n + 1, child), centers)
                if np.any(gap > 1e-12):
                    ok['center_nesting'] = False
                    failures.append(f'level {n}: centers are not centers one level down')

        if tree.centers_nest:
            home = tree.locate(x0, n)
            ring = space.sample_in_ball(
                _repeat_batch(space, x0, samples_per_cube * 4),
                np.full(samples_per_cube * 4, tree.c1 * scale * shrink), rng)
            if not np.all(tree.locate(ring, n) == home[0]):
                ok['root_point'] = False
                failures.append(f'level {n}: no cube contains B(x0, c1 b^n)')
        else:
            ok['root_point'] = None

        s = space.s
        lo = space.C ** -1 * tree.c1_prime ** -s * scale ** -s
        hi = space.C * tree.c1 ** -s * scale ** -s
        if not lo * (1 - 1e-9) <= count <= hi * (1 + 1e-9):
            ok['counts'] = False
            failures.append(f'level {n}: {count} cubes outside [{lo:.4g}, {hi:.4g}]')

    bound = doubling_bound(tree)
    worst = 0
    for _ in range(doubling_trials):
        x = _as_batch(space, space.take(space.sample(1, rng), 0))
        r = space.diam * math.exp(-rng.random() * math.log(1e3))
        n = next((k for k in range(top + 1) if tree.c1_prime * tree.b ** k <= r), None)
        if n is None:
            continue
        cover = union_of_balls(tree, x, [2.0 * r * (1 + 1e-9)], n, 'outer')
        worst = max(worst, len(cover))
        if len(cover) > bound:
            ok['doubling'] = False
            failures.append(f'doubling: {len(cover)} radius-{r:.3g} balls exceed {bound:.4g}')
            break

    audit = TreeAudit(space.name, tree.b, top, ok, failures)
    log = logger.info if audit.passed else logger.warning
    log(f'cube tree audit on {space.name} b={tree.b:g}: passed={audit.passed} '
        f'worst_doubling={worst} bound={bound:.4g}')
    return audit


def _repeat_batch(space: SpaceDescriptor, batch, count: int):
    if isinstance(batch, tuple):
        return tuple(np.repeat(part, count, axis=0) for part in batch)
    return np.repeat(batch, count, axis=0)
