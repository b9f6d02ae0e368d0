"""
Box-counting dimension on cube sets and the intersection laboratory.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from config.logging_config import get_logger
from lab.cubes import CubeSet, CubeTree, _CantorAxis, _CircleAxis, _CylinderAxis, _index_to_digits
from lab.errors import (
    InsufficientResolutionError,
    InvalidInputError,
    InvalidMapError,
    UndefinedDimensionError,
)
from utils.rng import TAG_MAPS, stream

logger = get_logger(__name__)

MIN_LEVELS = 3


@dataclass
class DimReport:
    """Least-squares slope of log count against level * log(1/b)."""

    slope: float
    stderr: float
    r2: float
    levels: List[int]
    counts: List[int]
    method: str = 'box'

    @property
    def dimension(self) -> float:
        return self.slope

    def to_dict(self) -> Dict[str, Any]:
        return {'slope': self.slope, 'stderr': self.stderr, 'r2': self.r2,
                'levels': list(self.levels), 'counts': list(self.counts), 'method': self.method}


def fit_dimension(levels: Sequence[int], counts: Sequence[float], b: float,
                  method: str = 'box') -> DimReport:
    """Fit log counts against scale exponents; levels with zero count are skipped."""
    levels = np.asarray(levels, dtype=int)
    counts = np.asarray(counts, dtype=float)
    keep = counts > 0
    if not keep.any():
        raise UndefinedDimensionError('every level count is zero')
    levels, counts = levels[keep], counts[keep]
    if levels.size < MIN_LEVELS:
        raise InsufficientResolutionError(f'dimension fit needs at least {MIN_LEVELS} usable levels',
                                          levels=[int(x) for x in levels])
    x = levels * math.log(1.0 / b)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ssr = float(np.sum(residuals ** 2))
    sxx = float(np.sum((x - x.mean()) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    stderr = math.sqrt(ssr / (x.size - 2) / sxx) if x.size > 2 and sxx > 0 else 0.0
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return DimReport(float(slope), stderr, r2, [int(v) for v in levels],
                     [int(round(c)) for c in counts], method)


def box_dimension(tree: CubeTree, F: CubeSet, levels: Optional[Sequence[int]] = None,
                  drop_saturated: bool = True) -> DimReport:
    """Count level-n ancestors of F for each n and fit the slope.

    Levels where every cube is hit are dropped when at least three
    unsaturated levels remain.
    """
    if F.is_empty():
        raise UndefinedDimensionError('box dimension of an empty set is undefined')
    levels = list(range(F.level + 1)) if levels is None else sorted(int(n) for n in levels)
    if levels and levels[-1] > F.level:
        raise InvalidInputError('box counting levels exceed the set resolution',
                                max_level=levels[-1], level=F.level)
    counts = [len(F.ancestors(n)) for n in levels]
    if drop_saturated:
        open_levels = [(n, c) for n, c in zip(levels, counts) if c < tree.count(n)]
        if len(open_levels) >= MIN_LEVELS:
            levels = [n for n, _ in open_levels]
            counts = [c for _, c in open_levels]
    return fit_dimension(levels, counts, tree.b, 'box')


def generation_dimension(tree: CubeTree, F: CubeSet, generations: Mapping[int, CubeSet]) -> DimReport:
    """Scale-matched counting: level-l members of generation l that meet F."""
    if F.is_empty():
        raise UndefinedDimensionError('generation counting of an empty set is undefined')
    levels, counts = [], []
    for level in sorted(generations):
        if level > F.level:
            continue
        members = generations[level]
        hit = np.isin(members.indices, F.ancestors(level).indices, assume_unique=True)
        levels.append(level)
        counts.append(int(hit.sum()))
    return fit_dimension(levels, counts, tree.b, 'generation')


def dyadic_windows(n_lo: int, n_hi: int, count: int) -> List[np.ndarray]:
    """The last ``count`` windows [2^k, 2^(k+1)) intersected with [n_lo, n_hi]."""
    if n_lo < 1 or n_hi < n_lo:
        raise InvalidInputError('window range needs 1 <= n_lo <= n_hi', n_lo=n_lo, n_hi=n_hi)
    windows = []
    k = int(math.floor(math.log2(n_lo)))
    while 2 ** k <= n_hi:
        lo, hi = max(2 ** k, n_lo), min(2 ** (k + 1) - 1, n_hi)
        if lo <= hi:
            windows.append(np.arange(lo, hi + 1, dtype=np.int64))
        k += 1
    return windows[-count:] if count > 0 else windows


class CubeMap(ABC):
    """A map of the space acting on cube sets."""

    measure_preserving = True

    @abstractmethod
    def apply(self, cubes: CubeSet) -> CubeSet:
        """Image of a cube set (exact, or the outer image when noted)."""

    def describe(self) -> Dict[str, Any]:
        return {'map': type(self).__name__}


class Identity(CubeMap):
    def apply(self, cubes):
        return cubes


class TorusTranslation(CubeMap):
    """x -> x + shift on a torus, with the shift snapped to the finest cube grid."""

    def __init__(self, tree: CubeTree, shift: Sequence[float]):
        if not all(isinstance(a, _CircleAxis) for a in tree.axes):
            raise InvalidMapError('translations act on tori only')
        if len(shift) != len(tree.axes):
            raise InvalidMapError('translation needs one shift per coordinate')
        self.tree = tree
        grid = [a.cells(tree.max_level) for a in tree.axes]
        self.steps = [int(round(float(s) * g)) % g for s, g in zip(shift, grid)]
        self.shift = [st / g for st, g in zip(self.steps, grid)]

    def aligned(self, level: int) -> bool:
        return all(st % (a.k ** (self.tree.max_level - level)) == 0
                   for st, a in zip(self.steps, self.tree.axes))

    def apply(self, cubes):
        tree, level = self.tree, cubes.level
        parts = tree._deinterleave(cubes.indices, level)
        options = []
        for part, axis, step in zip(parts, tree.axes, self.steps):
            K = axis.cells(level)
            fine = axis.k ** (tree.max_level - level)
            base = (part + step // fine) % K
            if step % fine == 0:
                options.append([base])
            else:
                options.append([base, (base + 1) % K])
        images = []
        for combo in np.stack(np.meshgrid(*[np.arange(len(o)) for o in options], indexing='ij'),
                              axis=-1).reshape(-1, len(options)):
            images.append(tree._interleave([options[a][c] for a, c in enumerate(combo)], level))
        return CubeSet(tree, level, np.concatenate(images))

    def describe(self):
        return {'map': 'TorusTranslation', 'shift': self.shift}


class DigitPermutation(CubeMap):
    """Apply one permutation of the alphabet to every address digit."""

    def __init__(self, tree: CubeTree, permutation: Sequence[int]):
        if not all(isinstance(a, (_CylinderAxis, _CantorAxis)) for a in tree.axes):
            raise InvalidMapError('digit permutations act on symbolic and cantor3 spaces')
        k = tree.axes[0].branching
        if sorted(int(p) for p in permutation) != list(range(k)) or \
                any(a.branching != k for a in tree.axes):
            raise InvalidMapError('digit permutation must permute the common alphabet',
                                  permutation=list(permutation))
        self.tree = tree
        self.permutation = np.asarray(permutation, dtype=np.int64)

    def apply(self, cubes):
        tree, level = self.tree, cubes.level
        mapped = []
        for part, axis in zip(tree._deinterleave(cubes.indices, level), tree.axes):
            digits = self.permutation[_index_to_digits(part, axis.branching, level, level)]
            index = np.zeros(part.shape, dtype=np.int64)
            for col in range(level):
                index = index * axis.branching + digits[..., col]
            mapped.append(index)
        return CubeSet(tree, level, tree._interleave(mapped, level))

    def describe(self):
        return {'map': 'DigitPermutation', 'permutation': [int(p) for p in self.permutation]}


class Similarity(CubeMap):
    """x -> ratio * x + shift; only ratio 1 preserves the measure."""

    def __init__(self, ratio: float, shift: Sequence[float] = ()):
        self.ratio = float(ratio)
        self.shift = list(shift)
        self.measure_preserving = abs(self.ratio - 1.0) < 1e-12

    def apply(self, cubes):
        if not self.measure_preserving:
            raise InvalidMapError('similarity with ratio != 1 does not preserve the measure',
                                  ratio=self.ratio)
        return TorusTranslation(cubes.tree, self.shift or [0.0] * len(cubes.tree.axes)).apply(cubes)

    def describe(self):
        return {'map': 'Similarity', 'ratio': self.ratio, 'shift': self.shift}


def random_translations(tree: CubeTree, count: int, seed: int) -> List[TorusTranslation]:
    rng = stream(seed, TAG_MAPS)
    return [TorusTranslation(tree, rng.random(len(tree.axes))) for _ in range(count)]


def random_permutations(tree: CubeTree, count: int, seed: int) -> List[DigitPermutation]:
    rng = stream(seed, TAG_MAPS)
    k = tree.axes[0].branching
    return [DigitPermutation(tree, rng.permutation(k)) for _ in range(count)]


@dataclass
class IntersectionReport:
    """Dimension of F and its images intersected one map at a time."""

    reference_t: float
    tolerance: float
    prefixes: List[DimReport]
    maps: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.slope >= self.reference_t - self.tolerance for p in self.prefixes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'reference_t': self.reference_t,
            'tolerance': self.tolerance,
            'prefixes': [dict(k=i + 1, **p.to_dict()) for i, p in enumerate(self.prefixes)],
            'maps': self.maps,
            'passed': self.passed,
        }


def intersection_lab(tree: CubeTree, F: CubeSet, maps: Sequence[CubeMap], reference_t: float,
                     levels: Optional[Sequence[int]] = None, tolerance: float = 0.15,
                     generations: Optional[Mapping[int, CubeSet]] = None) -> IntersectionReport:
    """Dimension of F, F n f1(F), F n f1(F) n f2(F), ... one prefix per map.

    With ``generations`` each prefix is measured by the scale-matched members
    of F that meet it; otherwise by plain ancestor counting.
    """
    for m in maps:
        if not m.measure_preserving:
            raise InvalidMapError(f'{type(m).__name__} is not measure preserving')
    current = F
    prefixes: List[DimReport] = []
    for k, m in enumerate(maps, start=1):
        current = current.intersect(m.apply(F))
        if current.is_empty():
            raise UndefinedDimensionError('intersection became empty', prefix=k)
        if generations is not None:
            prefixes.append(generation_dimension(tree, current, generations))
        else:
            prefixes.append(box_dimension(tree, current, levels))
    report = IntersectionReport(reference_t, tolerance, prefixes, [m.describe() for m in maps])
    logger.info(f'intersection lab: {len(maps)} maps, slopes '
                f'{[round(p.slope, 3) for p in prefixes]}, passed={report.passed}')
    return report


__all__ = [
    'CubeMap', 'DigitPermutation', 'DimReport', 'Identity', 'IntersectionReport', 'Similarity',
    'TorusTranslation', 'box_dimension', 'dyadic_windows', 'fit_dimension',
    'generation_dimension', 'intersection_lab', 'random_permutations', 'random_translations',
]
