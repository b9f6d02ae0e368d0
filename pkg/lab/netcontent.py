"""
Net content of finite-resolution sets and the large-intersection certificate.

The content of F inside a cube is the cheapest cover of F by tree cubes, a
cube Q costing mu(Q)^(t/s). For a set stored at level N the cheapest cover
never uses cubes finer than N, so a bottom-up pass over the occupied cubes
is exact.
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.logging_config import get_logger
from lab.cubes import CubeId, CubeSet, CubeTree
from lab.errors import BruteForceRefusedError, InvalidInputError, InvalidParameterError

logger = get_logger(__name__)

BRUTE_FORCE_DEPTH = 4
BRUTE_FORCE_LIMIT = 1_000_000
HISTOGRAM_BINS = 10


@dataclass
class NetContentResult:
    """Cheapest cube cover of F inside one cube."""

    value: float
    cover: List[CubeId]
    t: float

    def to_dict(self, branching: int) -> Dict[str, Any]:
        return {'t': self.t, 'value': self.value,
                'cover': [c.label(branching) for c in self.cover]}


@dataclass
class _Level:
    indices: np.ndarray
    cost: np.ndarray
    take: np.ndarray


def _check_inputs(tree: CubeTree, F: CubeSet, t: float) -> float:
    if F.tree is not tree:
        raise InvalidInputError('cube set belongs to another tree')
    if t < 0:
        raise InvalidParameterError('content exponent must be nonnegative', t=t)
    return t / tree.space.s


def _content_table(tree: CubeTree, F: CubeSet, t: float, top: int,
                   within: Optional[int] = None) -> Dict[int, _Level]:
    """Per-level DP state for every occupied cube between levels ``top`` and F.level."""
    exponent = _check_inputs(tree, F, t)
    beta = tree.branching
    idx = F.indices
    if within is not None:
        idx = idx[idx // beta ** (F.level - top) == within]
    table: Dict[int, _Level] = {}
    leaf_cost = float(beta) ** (-F.level * exponent)
    cost = np.full(idx.size, leaf_cost)
    table[F.level] = _Level(idx, cost, np.ones(idx.size, dtype=bool))
    for level in range(F.level - 1, top - 1, -1):
        parents, inverse = np.unique(idx // beta, return_inverse=True)
        children = np.bincount(inverse, weights=cost, minlength=parents.size)
        own = float(beta) ** (-level * exponent)
        take = own <= children
        cost = np.where(take, own, children)
        table[level] = _Level(parents, cost, take)
        idx = parents
    return table


def _reconstruct(tree: CubeTree, table: Dict[int, _Level], top: int, bottom: int) -> List[CubeId]:
    cover: List[CubeId] = []
    frontier = table[top].indices
    beta = tree.branching
    for level in range(top, bottom + 1):
        state = table[level]
        here = np.isin(state.indices, frontier)
        chosen = state.indices[here & state.take]
        cover.extend(tree.cube_id(level, int(i)) for i in chosen)
        if level == bottom:
            break
        open_parents = state.indices[here & ~state.take]
        below = table[level + 1].indices
        frontier = below[np.isin(below // beta, open_parents)]
    return cover


def net_content(tree: CubeTree, F: CubeSet, t: float, within: Optional[CubeId] = None) -> NetContentResult:
    """Exact net content of F inside ``within`` (default the root)."""
    cube = within or CubeId(0, ())
    if cube.level > F.level:
        F = F.refine(cube.level)
    position = tree.index_of(cube)
    table = _content_table(tree, F, t, cube.level, position)
    top = table[cube.level]
    if top.indices.size == 0:
        return NetContentResult(0.0, [], t)
    cover = _reconstruct(tree, table, cube.level, F.level)
    return NetContentResult(float(top.cost[0]), cover, t)


def net_content_bruteforce(tree: CubeTree, F: CubeSet, t: float,
                           within: Optional[CubeId] = None) -> float:
    """Minimum cost over every antichain cover of F inside ``within``.

    Refuses subtrees deeper than four levels or with more than a million covers.
    """
    exponent = _check_inputs(tree, F, t)
    cube = within or CubeId(0, ())
    if cube.level > F.level:
        F = F.refine(cube.level)
    depth = F.level - cube.level
    if depth > BRUTE_FORCE_DEPTH:
        raise BruteForceRefusedError('brute force is limited to four levels below the cube',
                                     depth=depth)
    beta = tree.branching
    root = tree.index_of(cube)
    members = set(int(i) for i in F.indices if i // beta ** depth == root)

    def occupied(level: int, index: int) -> bool:
        span = beta ** (F.level - level)
        return any(index * span <= m < (index + 1) * span for m in members)

    def covers(level: int, index: int) -> List[float]:
        if not occupied(level, index):
            return [0.0]
        own = float(beta) ** (-level * exponent)
        if level == F.level:
            return [own]
        options = [covers(level + 1, index * beta + j) for j in range(beta)]
        size = int(np.prod([len(o) for o in options], dtype=float))
        if size > BRUTE_FORCE_LIMIT:
            raise BruteForceRefusedError('too many covers to enumerate', covers=size)
        totals = [sum(combo) for combo in itertools.product(*options)]
        return [own] + totals

    return float(min(covers(cube.level, root)))


@dataclass
class Certificate:
    """c(Q) = content(F in Q) / mu(Q)^(t/s) over every cube down to max_depth."""

    t: float
    max_depth: int
    level: int
    min_c: float
    argmin: CubeId
    histogram: Tuple[List[float], List[int]]
    levels: Dict[int, float] = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.min_c > 0

    def to_dict(self, branching: int) -> Dict[str, Any]:
        edges, counts = self.histogram
        return {
            't': self.t,
            'maxDepth': self.max_depth,
            'level': self.level,
            'minC': self.min_c,
            'argminCube': self.argmin.label(branching),
            'histogram': {'edges': edges, 'counts': counts},
            'minCByLevel': {str(k): v for k, v in self.levels.items()},
            'passes': self.passes,
        }


def li_certificate(tree: CubeTree, F: CubeSet, t: float, max_depth: int) -> Certificate:
    """Content ratios of F over all cubes of levels 0..max_depth from one DP pass.

    Cubes that miss F have c = 0.
    """
    if max_depth < 0:
        raise InvalidParameterError('certificate depth must be nonnegative', max_depth=max_depth)
    if max_depth > F.level:
        F = F.refine(max_depth)
    exponent = _check_inputs(tree, F, t)
    table = _content_table(tree, F, t, 0)
    values: List[np.ndarray] = []
    best_c, best_id = np.inf, CubeId(0, ())
    per_level: Dict[int, float] = {}
    for level in range(max_depth + 1):
        count = tree.count(level)
        ratios = np.zeros(count)
        state = table[level]
        ratios[state.indices] = state.cost / float(tree.branching) ** (-level * exponent)
        values.append(ratios)
        i = int(np.argmin(ratios))
        per_level[level] = float(ratios[i])
        if ratios[i] < best_c:
            best_c, best_id = float(ratios[i]), tree.cube_id(level, i)
    everything = np.concatenate(values)
    counts, edges = np.histogram(np.clip(everything, 0.0, 1.0), bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    cert = Certificate(t, max_depth, F.level, best_c, best_id,
                       ([float(e) for e in edges], [int(c) for c in counts]), per_level)
    logger.debug(f'li certificate t={t:g} depth={max_depth} level={F.level}: min c={best_c:.4g}')
    return cert


def li_certificate_grid(tree: CubeTree, F: CubeSet, t_values: Sequence[float],
                        max_depth: int) -> List[Certificate]:
    """Certificates over a grid of exponents t' (the 'every t' < t' quantifier, sampled)."""
    return [li_certificate(tree, F, float(t), max_depth) for t in t_values]


__all__ = [
    'Certificate', 'NetContentResult', 'li_certificate', 'li_certificate_grid',
    'net_content', 'net_content_bruteforce',
]
