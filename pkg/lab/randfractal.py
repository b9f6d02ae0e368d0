"""
Limsup random fractals over the cube tree.

Level-n cube Q survives when its coin U_n(Q) falls below P_n(Q). Coins come
from counter-keyed streams, so a realization does not depend on evaluation
order, and one coin compared against two survival rules couples them
monotonically. Under block coupling, consecutive cubes share one coin.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.logging_config import get_logger
from lab.cubes import CubeSet, CubeTree
from lab.dimension import DimReport, dyadic_windows, generation_dimension
from lab.errors import (
    InvalidParameterError,
    ResolutionExceededError,
    UnsupportedModelError,
)
from utils.rng import TAG_SURVIVAL, keyed_uniforms

logger = get_logger(__name__)

MAX_SIMULATED_CUBES = 1 << 24
TRAILING_LEVELS = 4


class SurvivalRule(ABC):
    """P_n(Q) as a function of level and flat cube index."""

    analytic = True

    @abstractmethod
    def probabilities(self, tree: CubeTree, level: int, indices: np.ndarray) -> np.ndarray:
        """Survival probabilities of the listed level-n cubes."""

    def describe(self) -> Dict[str, Any]:
        return {'survival': type(self).__name__}


@dataclass
class UniformSurvival(SurvivalRule):
    """P_n(Q) = b^(n gamma) for every cube."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidParameterError('survival exponent must be nonnegative', gamma=self.gamma)

    def probabilities(self, tree, level, indices):
        return np.full(np.shape(indices), tree.b ** (level * self.gamma))

    def describe(self):
        return {'survival': 'uniform', 'gamma': self.gamma}


@dataclass
class SplitSurvival(SurvivalRule):
    """Exponent gamma_lo under first digit 0, gamma_hi elsewhere."""

    gamma_lo: float
    gamma_hi: float

    def __post_init__(self):
        if not 0 <= self.gamma_lo <= self.gamma_hi:
            raise InvalidParameterError('split survival needs 0 <= gamma_lo <= gamma_hi',
                                        gamma_lo=self.gamma_lo, gamma_hi=self.gamma_hi)

    def probabilities(self, tree, level, indices):
        indices = np.asarray(indices, dtype=np.int64)
        if level == 0:
            return np.ones(indices.shape)
        first = indices // tree.branching ** (level - 1)
        gamma = np.where(first == 0, self.gamma_lo, self.gamma_hi)
        return tree.b ** (level * gamma)

    def describe(self):
        return {'survival': 'split', 'gamma_lo': self.gamma_lo, 'gamma_hi': self.gamma_hi}


class CallableSurvival(SurvivalRule):
    """User rule (level, indices) -> probabilities; indices are not analytic."""

    analytic = False

    def __init__(self, func: Callable[[int, np.ndarray], np.ndarray]):
        self.func = func

    def probabilities(self, tree, level, indices):
        p = np.asarray(self.func(level, np.asarray(indices, dtype=np.int64)), dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise InvalidParameterError('survival probabilities must lie in [0, 1]', level=level)
        return p


class Dependence(ABC):
    @abstractmethod
    def block_size(self, tree: CubeTree, level: int) -> int:
        """Number of consecutive level-n cubes sharing one coin."""

    def describe(self) -> Dict[str, Any]:
        return {'dependence': type(self).__name__}


class Independent(Dependence):
    def block_size(self, tree, level):
        return 1

    def describe(self):
        return {'dependence': 'independent'}


@dataclass
class BlockCoupled(Dependence):
    """Blocks of ceil(b^(-n delta')) consecutive cubes share one coin."""

    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise InvalidParameterError('block exponent must be nonnegative', delta=self.delta)

    def block_size(self, tree, level):
        return max(1, int(math.ceil(tree.b ** (-level * self.delta) - 1e-9)))

    def describe(self):
        return {'dependence': 'block', 'delta': self.delta}


@dataclass
class RandomFractalModel:
    survival: SurvivalRule
    dependence: Dependence = field(default_factory=Independent)
    seed: int = 0

    def describe(self) -> Dict[str, Any]:
        return {**self.survival.describe(), **self.dependence.describe(), 'seed': self.seed}


def coins(model: RandomFractalModel, tree: CubeTree, level: int, indices: np.ndarray) -> np.ndarray:
    block = model.dependence.block_size(tree, level)
    return keyed_uniforms(model.seed, TAG_SURVIVAL, level, np.asarray(indices, dtype=np.int64) // block)


def simulate_level(model: RandomFractalModel, tree: CubeTree, n: int) -> CubeSet:
    """A(n): the surviving level-n cubes."""
    tree.check_level(n)
    count = tree.count(n)
    if count > MAX_SIMULATED_CUBES:
        raise ResolutionExceededError('too many cubes to simulate at this level', level=n, cubes=count)
    indices = np.arange(count, dtype=np.int64)
    p = model.survival.probabilities(tree, n, indices)
    alive = coins(model, tree, n, indices) < p
    return CubeSet(tree, n, indices[alive])


@dataclass
class IndexReport:
    """Per-level survival and correlation indices with trailing averages."""

    gamma1_hat: float
    gamma2_hat: float
    delta_hat: float
    epsilon: float
    per_level: List[Dict[str, float]]

    def to_dict(self) -> Dict[str, Any]:
        return {'gamma1_hat': self.gamma1_hat, 'gamma2_hat': self.gamma2_hat,
                'delta_hat': self.delta_hat, 'epsilon': self.epsilon, 'per_level': self.per_level}


def correlation_count(model: RandomFractalModel, tree: CubeTree, n: int, epsilon: float) -> int:
    """f(n, eps): max over Q of #{Q': Cov(Z(Q), Z(Q')) >= eps P(Q) P(Q')}.

    Shared-coin pairs have covariance min(P, P') - P P'; all other pairs are
    independent.
    """
    count = tree.count(n)
    indices = np.arange(count, dtype=np.int64)
    p = model.survival.probabilities(tree, n, indices)
    block = model.dependence.block_size(tree, n)
    start = (indices // block) * block
    hits = np.zeros(count, dtype=np.int64)
    for offset in range(min(block, count)):
        other = start + offset
        valid = other < count
        q = p[np.where(valid, other, 0)]
        cov = np.minimum(p, q) - p * q
        hits += (valid & (cov >= epsilon * p * q) & (p * q > 0)).astype(np.int64)
    return int(hits.max()) if count else 0


def empirical_indices(model: RandomFractalModel, tree: CubeTree, n_range: Sequence[int],
                      epsilon: float = 0.01) -> IndexReport:
    """Survival indices from the rule itself and the correlation exponent."""
    if not model.survival.analytic:
        raise UnsupportedModelError('indices need an analytically known survival rule')
    log_inv_b = math.log(1.0 / tree.b)
    rows: List[Dict[str, float]] = []
    for n in n_range:
        if n < 1:
            continue
        p = model.survival.probabilities(tree, n, np.arange(tree.count(n), dtype=np.int64))
        with np.errstate(divide='ignore'):
            logs = np.log(p) / log_inv_b
        f = correlation_count(model, tree, n, epsilon)
        rows.append({
            'n': int(n),
            'gamma1': float(-logs.max() / n),
            'gamma2': float(-logs.min() / n),
            'f': f,
            'delta': math.log(max(f, 1)) / log_inv_b / n,
        })
    if not rows:
        raise InvalidParameterError('index range needs a level n >= 1')
    tail = rows[-TRAILING_LEVELS:]
    report = IndexReport(
        gamma1_hat=float(np.mean([r['gamma1'] for r in tail])),
        gamma2_hat=float(np.mean([r['gamma2'] for r in tail])),
        delta_hat=float(np.mean([r['delta'] for r in tail])),
        epsilon=epsilon,
        per_level=rows,
    )
    logger.debug(f'indices: gamma1={report.gamma1_hat:.4g} gamma2={report.gamma2_hat:.4g} '
                 f'delta={report.delta_hat:.4g}')
    return report


@dataclass
class FractalReport:
    """Dimension estimate of the windowed limsup approximation and the bound check."""

    seed: int
    level: int
    measure: float
    extinct: bool
    extinction_level: Optional[int]
    dim: Optional[DimReport]
    bounds: Tuple[float, float]
    tolerance: float
    indices: IndexReport
    lower_active: bool = True

    @property
    def in_bounds(self) -> Optional[bool]:
        if self.dim is None:
            return None
        lo, hi = self.bounds
        low_ok = (not self.lower_active) or self.dim.slope >= lo - self.tolerance
        return bool(low_ok and self.dim.slope <= hi + self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'level': self.level,
            'measure': self.measure,
            'extinct': self.extinct,
            'extinction_level': self.extinction_level,
            'dim': None if self.dim is None else self.dim.to_dict(),
            'bounds': list(self.bounds),
            'lower_active': self.lower_active,
            'tolerance': self.tolerance,
            'in_bounds': self.in_bounds,
            'gamma1_hat': self.indices.gamma1_hat,
            'gamma2_hat': self.indices.gamma2_hat,
            'delta_hat': self.indices.delta_hat,
        }


def dimension_bounds(s: float, gamma1: float, gamma2: float, delta: float) -> Tuple[float, float]:
    """[max(0, s - gamma2 - delta), max(0, s - gamma1)]."""
    return max(0.0, s - gamma2 - delta), max(0.0, s - gamma1)


def fractal_dimension_experiment(model: RandomFractalModel, tree: CubeTree, n_range: Tuple[int, int],
                                 windows: int = 4, tolerance: float = 0.15,
                                 epsilon: float = 0.01) -> FractalReport:
    """Simulate the windowed approximation and compare its dimension to the bounds.

    The approximation is the intersection over the last ``windows`` dyadic
    windows of the union of A(n) inside each window, held at the finest
    level. Dimension counts, for each level l of the last window, the
    survivors of A(l) that meet the approximation.
    """
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    tree.check_level(n_hi)
    groups = dyadic_windows(n_lo, n_hi, windows)
    indices = empirical_indices(model, tree, range(n_lo, n_hi + 1), epsilon)
    bounds = dimension_bounds(tree.space.s, indices.gamma1_hat, indices.gamma2_hat, indices.delta_hat)
    lower_active = tree.space.s - indices.gamma2_hat - indices.delta_hat > 0

    levels: Dict[int, CubeSet] = {}
    approx: Optional[CubeSet] = None
    extinction: Optional[int] = None
    for window in groups:
        union = CubeSet.empty(tree, n_hi)
        for n in window:
            levels[int(n)] = simulate_level(model, tree, int(n))
            union = union.union(levels[int(n)].refine(n_hi))
        approx = union if approx is None else approx.intersect(union)
        if approx.is_empty():
            extinction = int(window[-1])
            break

    dim = None
    if extinction is None:
        generations = {int(n): levels[int(n)] for n in groups[-1]}
        dim = generation_dimension(tree, approx, generations)
    report = FractalReport(
        seed=model.seed, level=n_hi, measure=0.0 if approx is None else approx.measure,
        extinct=extinction is not None, extinction_level=extinction, dim=dim, bounds=bounds,
        tolerance=tolerance, indices=indices, lower_active=lower_active,
    )
    if report.extinct:
        logger.info(f'random fractal seed={model.seed} went extinct at level {extinction}')
    else:
        logger.info(f'random fractal seed={model.seed}: dim={dim.slope:.4f} bounds={bounds} '
                    f'in_bounds={report.in_bounds}')
    return report


__all__ = [
    'BlockCoupled', 'CallableSurvival', 'FractalReport', 'Independent', 'IndexReport',
    'RandomFractalModel', 'SplitSurvival', 'UniformSurvival', 'correlation_count',
    'dimension_bounds', 'empirical_indices', 'fractal_dimension_experiment', 'simulate_level',
]
