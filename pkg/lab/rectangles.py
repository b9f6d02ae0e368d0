"""
Limsup sets of rectangles prod B_i(x_n,i, r_n^a_i) inside product spaces.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.logging_config import get_logger
from lab.covering import (
    CenterProcess,
    CoveringReport,
    RadiusSchedule,
    covering_dimension_experiment,
    generation_levels,
    stream_limsup,
)
from lab.cubes import CubeTree, build_tree, factor_radii
from lab.dimension import DimReport, generation_dimension
from lab.energy import LambdaQuery, LambdaReport, lambda_index
from lab.errors import InvalidParameterError, PreconditionError, UndefinedDimensionError
from lab.netcontent import li_certificate
from lab.spaces import ProductSpace, SpaceDescriptor

logger = get_logger(__name__)

ORDERING = '1 <= a_1 <= ... <= a_d'
FULL_MEASURE_THRESHOLD = 0.99
LAMBDA_INDICES = (16, 64, 256, 1024, 4096, 16384)


@dataclass(frozen=True)
class RectangleSpec:
    """Factors with their side exponents and the common radius schedule."""

    factors: Tuple[SpaceDescriptor, ...]
    exponents: Tuple[float, ...]
    schedule: RadiusSchedule = RadiusSchedule.power(0.5)

    def __post_init__(self):
        if len(self.factors) == 0 or len(self.factors) != len(self.exponents):
            raise InvalidParameterError('rectangle spec needs one exponent per factor',
                                        factors=len(self.factors), exponents=len(self.exponents))
        a = [float(x) for x in self.exponents]
        if a[0] < 1 or any(x > y for x, y in zip(a, a[1:])):
            raise InvalidParameterError(f'rectangle exponents must satisfy {ORDERING}', exponents=a)

    @classmethod
    def canonical(cls, factors: Sequence[SpaceDescriptor], exponents: Sequence[float],
                  schedule: Optional[RadiusSchedule] = None) -> 'RectangleSpec':
        """Sort factors together with their exponents into ascending order."""
        pairs = sorted(zip(exponents, range(len(factors))), key=lambda p: p[0])
        return cls(tuple(factors[i] for _, i in pairs), tuple(float(a) for a, _ in pairs),
                   schedule or RadiusSchedule.power(0.5))

    @property
    def space(self) -> ProductSpace:
        return ProductSpace(tuple(self.factors))

    @property
    def dims(self) -> List[float]:
        return [f.s for f in self.factors]

    def describe(self) -> Dict[str, Any]:
        return {'factors': [f.name for f in self.factors], 'a': list(self.exponents),
                **self.schedule.describe()}


@dataclass
class ExponentReport:
    value: float
    argmin: int
    table: List[Dict[str, float]]

    def to_dict(self) -> Dict[str, Any]:
        return {'exponent': self.value, 'argmin': self.argmin, 'table': self.table}


def rectangle_exponent(spec: RectangleSpec) -> ExponentReport:
    """min_i (sum s_j + a_i sum_(j<=i) s_j - sum_(j<=i) a_j s_j) / a_i, i counted from 1."""
    s = np.asarray(spec.dims, dtype=float)
    a = np.asarray(spec.exponents, dtype=float)
    total = float(s.sum())
    prefix_s = np.cumsum(s)
    prefix_as = np.cumsum(a * s)
    values = (total + a * prefix_s - prefix_as) / a
    i = int(np.argmin(values))
    table = [{'i': k + 1, 'a': float(a[k]), 'value': float(v)} for k, v in enumerate(values)]
    return ExponentReport(float(values[i]), i + 1, table)


def energy_ratio_exponent(spec: RectangleSpec, t: float) -> Dict[str, float]:
    """Decay exponent e of I_t(R_n) mu(B_n) / mu(R_n)^2 <= const r_n^e.

    j is the index with sum_(i<j) s_i < t <= sum_(i<=j) s_i; the ratio stays
    bounded exactly while e >= 0.
    """
    s = np.asarray(spec.dims, dtype=float)
    a = np.asarray(spec.exponents, dtype=float)
    prefix = np.cumsum(s)
    if not 0 < t <= prefix[-1]:
        raise InvalidParameterError('energy ratio needs 0 < t <= sum s_i', t=t)
    j = int(np.searchsorted(prefix, t - 1e-12))
    value = -a[j] * t + a[j] * prefix[j] + prefix[-1] - float(np.sum(a[:j + 1] * s[:j + 1]))
    return {'t': float(t), 'j': j + 1, 'exponent': float(value)}


def rectangle_lambda(spec: RectangleSpec, seed: int = 0, budget: int = 50_000,
                     grid_step: float = 0.05, epsilon: float = 0.05,
                     n_values: Sequence[int] = LAMBDA_INDICES) -> LambdaReport:
    """lambda_index with E_n the rectangle inside B_n."""
    radii = spec.schedule.radii(np.asarray(n_values))
    query = LambdaQuery(spec.space, list(n_values), [float(r) for r in radii], rule='rectangle',
                        exponents=tuple(spec.exponents), grid_step=grid_step, epsilon=epsilon,
                        budget=budget, seed=seed)
    return lambda_index(query)


@dataclass
class RectangleReport:
    seed: int
    exponent: ExponentReport
    dim: DimReport
    measure: float
    ball_measure: float
    tolerance: float
    certificate: Dict[str, Any]
    spec: Dict[str, Any]

    @property
    def in_tolerance(self) -> bool:
        return abs(self.dim.slope - self.exponent.value) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed, 'exponent': self.exponent.value, 'argmin': self.exponent.argmin,
            'dim': self.dim.to_dict(), 'measure': self.measure, 'ball_measure': self.ball_measure,
            'tolerance': self.tolerance, 'in_tolerance': self.in_tolerance,
            'certificate': self.certificate, **self.spec,
        }


def rectangle_dimension_experiment(spec: RectangleSpec, process: Optional[CenterProcess] = None,
                                   n_max: int = 100_000, levels: Tuple[int, int] = (4, 10),
                                   seed: int = 0, windows: int = 4, tolerance: float = 0.15,
                                   certificate_depth: int = 6,
                                   tree: Optional[CubeTree] = None
                                   ) -> Union[RectangleReport, CoveringReport]:
    """Dimension of the windowed rectangle limsup against the rectangle exponent.

    The un-shrunk balls must cover the space at working resolution; their
    tail union over the last windows stands in for limsup B_n. A single
    factor with a = (1) is the covering experiment itself.
    """
    process = process or CenterProcess()
    if len(spec.factors) == 1 and spec.exponents[0] == 1:
        return covering_dimension_experiment(spec.factors[0], process, spec.schedule, n_max,
                                             levels, seed, windows, tolerance, certificate_depth)
    lo, hi = levels
    space = spec.space
    tree = tree or build_tree(space, max_level=hi)
    exponent = rectangle_exponent(spec)

    balls = stream_limsup(tree, process, spec.schedule, n_max, hi, windows, seed)
    if balls.tail.measure < FULL_MEASURE_THRESHOLD:
        raise PreconditionError('balls B_n do not cover the space at working resolution',
                                measure=balls.tail.measure, threshold=FULL_MEASURE_THRESHOLD)

    a = [float(x) for x in spec.exponents]

    def shape(r):
        return factor_radii(tree, [r ** ai for ai in a])

    gens = generation_levels(tree, spec.schedule, n_max, levels, exponent=a[-1])
    rects = stream_limsup(tree, process, spec.schedule, n_max, hi, windows, seed, shape=shape,
                          scale=lambda r: r ** a[-1], generation_levels=gens)
    if rects.approx.is_empty():
        raise UndefinedDimensionError('rectangle approximation is empty', seed=seed)
    dim = generation_dimension(tree, rects.approx, rects.generations)
    cert = li_certificate(tree, rects.approx, 0.8 * exponent.value, min(certificate_depth, hi))
    report = RectangleReport(seed, exponent, dim, rects.approx.measure, balls.tail.measure,
                             tolerance, cert.to_dict(tree.branching), spec.describe())
    logger.info(f'rectangles seed={seed} a={a}: exponent={exponent.value:g} dim={dim.slope:.4f}')
    return report


__all__ = [
    'ExponentReport', 'RectangleReport', 'RectangleSpec', 'energy_ratio_exponent',
    'rectangle_dimension_experiment', 'rectangle_exponent', 'rectangle_lambda',
]
