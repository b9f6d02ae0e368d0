"""
t-energies, t-potentials, the two-sided energy bounds and the lambda index.

Estimators, cheapest first:
  closed-form   circle arcs and the whole circle
  recursion     symbolic spaces, split by the first level where addresses differ
  quadrature    axis boxes in products of circles, via the law of the max distance
  monte-carlo   shell importance sampling around each point of U (finite
                variance for every t < s); plain i.i.d. pairs on request
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.logging_config import get_logger
from lab.cubes import CubeSet, CubeTree, cubeset_diameter
from lab.errors import (
    DivergentEnergyError,
    EstimatorError,
    InsufficientResolutionError,
    InvalidInputError,
    InvalidParameterError,
    UnsupportedModelError,
)
from lab.spaces import (
    Ball,
    Box,
    ProductSpace,
    SpaceDescriptor,
    SymbolicSpace,
    TorusSpace,
    measure_ball,
)
from utils.rng import TAG_ENERGY, TAG_LAMBDA, derive_seed, stream

logger = get_logger(__name__)

Region = Union[None, Ball, Box, CubeSet]

BATCH = 4096
MAX_REDRAWS = 64
QUADRATURE_POINTS = 20001
DEFAULT_BUDGET = 200_000
METHODS = ('auto', 'exact', 'quadrature', 'monte-carlo')


@dataclass
class EnergyEstimate:
    """Value of I_t(mu, U) with its standard error (0 for exact methods).

    Monte Carlo estimates integrate rho^-t over pairs at least ``floor`` apart;
    ``close_pairs`` counts the draws that fell under the floor and were redrawn.
    """

    value: float
    stderr: float
    samples: int
    method: str
    t: float
    floor: float = 0.0
    close_pairs: int = 0

    @property
    def resampled_rate(self) -> float:
        draws = self.samples + self.close_pairs
        return self.close_pairs / draws if draws else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {'t': self.t, 'value': self.value, 'stderr': self.stderr,
                'samples': self.samples, 'method': self.method, 'floor': self.floor,
                'close_pairs': self.close_pairs, 'resampled_rate': self.resampled_rate}


def _tile(x, count: int):
    if isinstance(x, tuple):
        return tuple(np.repeat(np.asarray(p)[None, ...], count, axis=0) for p in x)
    return np.repeat(np.asarray(x)[None, ...], count, axis=0)


class _Region:
    """U with its exact measure, diameter, mu|U sampler and membership test."""

    def __init__(self, space: SpaceDescriptor, target: Region):
        self.space = space
        self.target = target
        if isinstance(target, Ball) and target.radius > space.diam:
            self.target = target = None
        if target is None:
            self.kind = 'space'
            self.measure = 1.0
            self.diameter = space.diam
        elif isinstance(target, Ball):
            self.kind = 'ball'
            self.measure = measure_ball(space, target)
            self.diameter = space.ball_diameter(target.center, target.radius)
        elif isinstance(target, Box):
            if not isinstance(space, ProductSpace) or len(space.factors) != len(target.radii):
                raise InvalidInputError('boxes live in product spaces with one radius per factor')
            self.kind = 'box'
            self.measure = 0.0 if target.empty else space.measure_box(target.center, target.radii)
            self.diameter = max(f.ball_diameter(c, r) for f, c, r
                                in zip(space.factors, target.center, target.radii))
        elif isinstance(target, CubeSet):
            if target.tree.space != space:
                raise InvalidInputError('cube set belongs to another space')
            self.kind = 'cubes'
            self.measure = target.measure
            self.diameter = cubeset_diameter(target)
        else:
            raise InvalidInputError(f'unsupported region type {type(target).__name__}')

    def sample(self, count: int, rng: np.random.Generator):
        space, target = self.space, self.target
        if self.kind == 'space':
            return space.sample(count, rng)
        if self.kind == 'ball':
            return space.sample_in_ball(_tile(target.center, count), np.full(count, target.radius), rng)
        if self.kind == 'box':
            radii = [np.full(count, r) for r in target.radii]
            return space.sample_in_box(_tile(target.center, count), radii, rng)
        picks = target.indices[rng.integers(0, len(target), size=count)]
        return target.tree.sample_in_cubes(target.level, picks, rng)

    def contains(self, points) -> np.ndarray:
        space, target = self.space, self.target
        if self.kind == 'space':
            return np.ones(space.batch_size(points), dtype=bool)
        if self.kind == 'ball':
            return space.distance(points, target.center) < target.radius
        if self.kind == 'box':
            inside = [f.distance(p, c) < r for f, p, c, r
                      in zip(space.factors, points, target.center, target.radii)]
            return np.logical_and.reduce(inside)
        return target.contains(points)


def _check_exponent(space: SpaceDescriptor, t: float) -> None:
    if t < 0:
        raise InvalidParameterError('energy exponent must be nonnegative', t=t)
    if t >= space.s:
        raise DivergentEnergyError(f't = {t:g} is not below s = {space.s:g}; the energy diverges',
                                   t=t, s=space.s)


def _closed_form(space: SpaceDescriptor, region: _Region, t: float) -> Optional[float]:
    if not (isinstance(space, TorusSpace) and space.d == 1):
        return None
    if region.kind == 'space':
        return 2.0 ** t / (1.0 - t)
    if region.kind == 'ball' and region.target.radius <= 0.25:
        arc = 2.0 * region.target.radius
        return 2.0 * arc ** (2.0 - t) / ((1.0 - t) * (2.0 - t))
    return None


def _symbolic_recursion(space: SpaceDescriptor, region: _Region, t: float) -> Optional[float]:
    if not isinstance(space, SymbolicSpace):
        return None
    m, b = space.m, space.b
    tail = (1.0 - 1.0 / m) / (1.0 - b ** (-t) / m)
    if region.kind == 'space':
        return tail
    if region.kind == 'ball':
        k = int(space.ball_depth(region.target.radius))
        if k > space.depth:
            return None
        return float(m) ** (-2 * k) * b ** (-k * t) * tail
    if region.kind != 'cubes':
        return None
    cubes: CubeSet = region.target
    level = cubes.level
    idx = cubes.indices
    mass = np.full(idx.size, float(m) ** -level)
    total = idx.size * float(m) ** (-2 * level) * b ** (-level * t) * tail
    for lvl in range(level - 1, -1, -1):
        parent = idx // m
        idx, inverse = np.unique(parent, return_inverse=True)
        sums = np.bincount(inverse, weights=mass)
        squares = np.bincount(inverse, weights=mass ** 2)
        total += float(np.sum(sums ** 2 - squares)) * b ** (-lvl * t)
        mass = sums
    return float(total)


def _torus_factors(space: SpaceDescriptor) -> Optional[List[int]]:
    """Coordinate count of every torus factor, or None if a factor is not a torus."""
    if isinstance(space, TorusSpace):
        return [space.d]
    if isinstance(space, ProductSpace) and all(isinstance(f, TorusSpace) for f in space.factors):
        return [f.d for f in space.factors]
    return None


def _arc_lengths(space: SpaceDescriptor, region: _Region) -> Optional[List[float]]:
    dims = _torus_factors(space)
    if dims is None:
        return None
    total = sum(dims)

    def arc(r: float) -> Optional[float]:
        if r > 0.5:
            return 1.0
        if r <= 0.25:
            return 2.0 * r
        return None

    if region.kind == 'space':
        return [1.0] * total
    if region.kind == 'ball':
        length = arc(region.target.radius)
        return None if length is None else [length] * total
    if region.kind == 'box':
        lengths = []
        for d, r in zip(dims, region.target.radii):
            length = arc(r)
            if length is None:
                return None
            lengths.extend([length] * d)
        return lengths
    cubes: CubeSet = region.target
    if len(cubes) != 1:
        return None
    return [1.0 / axis.cells(cubes.level) for axis in cubes.tree.axes]


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def _box_quadrature(lengths: Sequence[float], t: float) -> float:
    """E[M^-t] for M the max of independent circle distances inside arcs.

    Each coordinate distance of two uniform points of an arc of length L <= 1/2
    has distribution 2u/L - u^2/L^2; on the full circle it is 2u on [0, 1/2].
    """
    lengths = np.asarray(lengths, dtype=float)
    d = lengths.size
    tops = np.where(lengths >= 1.0, 0.5, lengths)
    top = float(tops.max())
    if t == 0:
        return 1.0

    def law(u: np.ndarray) -> np.ndarray:
        out = np.ones_like(u)
        for length in lengths:
            if length >= 1.0:
                g = np.minimum(2.0 * u, 1.0)
            else:
                v = np.minimum(u / length, 1.0)
                g = 2.0 * v - v * v
            out *= g
        return out

    floor = float(tops.min()) * 1e-8
    grid = np.union1d(np.geomspace(floor, top, QUADRATURE_POINTS), tops)
    logs = np.log(grid)
    integrand = t * grid ** (-t) * law(grid)
    body = _trapezoid(integrand, logs)
    lead = float(np.prod(2.0 / np.where(lengths >= 1.0, 1.0, lengths)))
    head = t * lead * floor ** (d - t) / (d - t)
    return head + body + top ** (-t)


def distance_floor(space: SpaceDescriptor, tree: Optional[CubeTree] = None) -> float:
    """b^maxLevel of the working tree, never below the precision of the space."""
    if tree is None:
        return space.resolution
    return max(space.resolution, tree.b ** tree.max_level)


def _shell_plan(space: SpaceDescriptor, reach: float, t: float,
                floor: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """Shell radii R_j = R_0 2^-j down to the floor, and their probabilities."""
    if reach <= floor:
        raise InsufficientResolutionError('region is smaller than the distance floor',
                                          reach=reach, floor=floor)
    count = int(math.floor(math.log2(reach / floor)))
    radii = reach * 2.0 ** -np.arange(count + 1, dtype=float)
    theta = (space.s - t) / 2.0
    weights = 2.0 ** (-theta * np.arange(count + 1, dtype=float))
    return radii, weights / weights.sum(), floor


def _shell_weights(space: SpaceDescriptor, x, t: float, region: _Region,
                   plan: Tuple[np.ndarray, np.ndarray, float],
                   rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """rho^-t 1_U(y) / q(y | x, rho >= floor) for y drawn from the shell mixture around each x.

    Draws closer than the floor are redrawn; the weights use the mixture
    density conditioned on rho >= floor, so the estimate covers exactly the
    pairs at least the floor apart.
    """
    radii, probs, floor = plan
    n = space.batch_size(x)
    shells = np.empty(n, dtype=np.int64)
    rho = np.empty(n)
    inside = np.empty(n, dtype=bool)
    pending = np.arange(n)
    close = 0
    for _ in range(MAX_REDRAWS + 1):
        xs = space.take(x, pending)
        picks = rng.choice(radii.size, size=pending.size, p=probs)
        y = space.sample_in_ball(xs, radii[picks], rng)
        shells[pending] = picks
        rho[pending] = np.asarray(space.distance(xs, y), dtype=float)
        inside[pending] = region.contains(y)
        near = rho[pending] < floor
        if not near.any():
            break
        close += int(near.sum())
        pending = pending[near]
    else:
        raise InsufficientResolutionError('shell draws keep falling under the distance floor',
                                          floor=floor, pending=int(pending.size))
    active = radii[None, :] > rho[:, None]
    top = int(active.sum(axis=1).max())
    density = np.zeros(n)
    near_mass = np.asarray(space.measure_radius(x, np.full(n, floor)), dtype=float)
    p_close = np.zeros(n)
    for j in range(radii.size):
        mass = np.maximum(np.asarray(space.measure_radius(x, np.full(n, radii[j])), dtype=float), 1e-300)
        p_close += probs[j] * np.minimum(near_mass / mass, 1.0)
        if j < top:
            density += np.where(active[:, j], probs[j] / mass, 0.0)
    values = rho ** (-t) * (1.0 - p_close) / density
    return np.where(inside, values, 0.0), close


def _pair_values(space: SpaceDescriptor, region: _Region, t: float, n: int, floor: float,
                 rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """mu(U) rho^-t over i.i.d. pairs of mu|U; pairs under the floor are redrawn."""
    rho = np.asarray(space.distance(region.sample(n, rng), region.sample(n, rng)), dtype=float)
    close = 0
    for _ in range(MAX_REDRAWS):
        near = np.flatnonzero(rho < floor)
        if near.size == 0:
            break
        close += int(near.size)
        rho[near] = space.distance(region.sample(near.size, rng), region.sample(near.size, rng))
    else:
        if np.any(rho < floor):
            raise InsufficientResolutionError('pairs keep falling under the distance floor',
                                              floor=floor)
    return region.measure * rho ** (-t), close


def _run_shard(space, region, t, sampler, size, seed, shard, plan) -> Tuple[float, float, int, int]:
    rng = stream(seed, TAG_ENERGY, shard)
    total = total_sq = 0.0
    done = close = 0
    while done < size:
        n = min(BATCH, size - done)
        if sampler == 'pairs':
            values, near = _pair_values(space, region, t, n, plan[2], rng)
        else:
            values, near = _shell_weights(space, region.sample(n, rng), t, region, plan, rng)
        total += float(values.sum())
        total_sq += float(np.square(values).sum())
        done += n
        close += near
    return total, total_sq, done, close


def _monte_carlo(space: SpaceDescriptor, region: _Region, t: float, budget: int, seed: int,
                 shards: int, sampler: str, workers: int, floor: float) -> EnergyEstimate:
    if sampler not in ('shell', 'pairs'):
        raise InvalidParameterError(f'unknown sampler: {sampler}')
    if budget < 2:
        raise InvalidParameterError('Monte Carlo budget must be at least 2', budget=budget)
    shards = max(1, min(shards, budget))
    sizes = [budget // shards + (1 if i < budget % shards else 0) for i in range(shards)]
    plan = _shell_plan(space, region.diameter * (1.0 + 1e-9) + 1e-15, t, floor)
    jobs = [(space, region, t, sampler, size, seed, i, plan) for i, size in enumerate(sizes)]
    if workers > 1 and shards > 1:
        with ThreadPoolExecutor(max_workers=min(workers, shards)) as pool:
            parts = list(pool.map(lambda job: _run_shard(*job), jobs))
    else:
        parts = [_run_shard(*job) for job in jobs]
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    count = sum(p[2] for p in parts)
    close = sum(p[3] for p in parts)
    mean = total / count
    variance = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    value = region.measure * mean
    stderr = region.measure * math.sqrt(variance / count)
    if sampler == 'pairs' and close:
        # i.i.d. pairs estimate the conditional mean; scale to the pairs at least the floor apart
        kept = count / (count + close)
        value, stderr = value * kept, stderr * kept
    if close:
        logger.debug(f'energy t={t:g}: redrew {close} draws under the floor {floor:.3g}')
    return EnergyEstimate(value, stderr, count, 'monte-carlo', t, floor, close)


def energy(space: SpaceDescriptor, U: Region, t: float, budget: int = DEFAULT_BUDGET,
           seed: int = 0, method: str = 'auto', sampler: str = 'shell', shards: int = 4,
           workers: int = 1, tree: Optional[CubeTree] = None) -> EnergyEstimate:
    """I_t(mu, U) = double integral of rho(x, y)^-t over U x U.

    ``U`` is a Ball, a Box (product spaces), a CubeSet, or None for the whole
    space. ``method='auto'`` takes the cheapest exact method available and
    falls back to Monte Carlo. Monte Carlo distances stay above b^maxLevel of
    ``tree`` (the tree of a CubeSet ``U`` by default); without a tree the
    floor is the working precision of the space.
    """
    _check_exponent(space, t)
    if method not in METHODS:
        raise InvalidParameterError(f'unknown energy method: {method}', method=method)
    region = _Region(space, U)
    if region.measure <= 0:
        return EnergyEstimate(0.0, 0.0, 0, 'closed-form', t)
    if t == 0:
        return EnergyEstimate(region.measure ** 2, 0.0, 0, 'closed-form', t)

    if method in ('auto', 'exact'):
        value = _closed_form(space, region, t)
        if value is not None:
            return EnergyEstimate(value, 0.0, 0, 'closed-form', t)
        value = _symbolic_recursion(space, region, t)
        if value is not None:
            return EnergyEstimate(value, 0.0, 0, 'recursion', t)
        if method == 'exact':
            lengths = _arc_lengths(space, region)
            if lengths is None:
                raise UnsupportedModelError(f'no exact energy for this region on {space.name}')
    if method in ('auto', 'exact', 'quadrature'):
        lengths = _arc_lengths(space, region)
        if lengths is not None:
            value = region.measure ** 2 * _box_quadrature(lengths, t)
            return EnergyEstimate(value, 0.0, 0, 'quadrature', t)
        if method == 'quadrature':
            raise UnsupportedModelError('quadrature needs an axis box in a product of circles')
    if tree is None and region.kind == 'cubes':
        tree = region.target.tree
    floor = distance_floor(space, tree)
    estimate = _monte_carlo(space, region, t, budget, seed, shards, sampler, workers, floor)
    logger.debug(f'energy t={t:g} on {space.name} ({region.kind}): '
                 f'{estimate.value:.6g} +- {estimate.stderr:.2g} from {estimate.samples} samples')
    return estimate


def potential(space: SpaceDescriptor, U: Region, y, t: float, budget: int = 20_000,
              seed: int = 0) -> EnergyEstimate:
    """phi_t(mu, U, y) = integral over U of rho(x, y)^-t, by shell sampling around y."""
    _check_exponent(space, t)
    region = _Region(space, U)
    space.check_point(y)
    plan = _shell_plan(space, space.diam * (1.0 + 1e-9) + 1e-15, t, distance_floor(space))
    rng = stream(seed, TAG_ENERGY, 1 << 20)
    values = []
    done = close = 0
    while done < budget:
        n = min(BATCH, budget - done)
        weights, near = _shell_weights(space, _tile(y, n), t, region, plan, rng)
        values.append(weights)
        done += n
        close += near
    values = np.concatenate(values)
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return EnergyEstimate(float(values.mean()), stderr, int(values.size), 'monte-carlo', t,
                          plan[2], close)


def lemma_constant(C: float, s: float, t: float) -> float:
    """Upper energy constant: sum over j >= 0 of 2^{(1+j)(t-s)} (C 2^s - 1/C)."""
    if t >= s:
        raise DivergentEnergyError('the upper energy bound needs t < s', t=t, s=s)
    ratio = 2.0 ** (t - s)
    return (C * 2.0 ** s - 1.0 / C) * ratio / (1.0 - ratio)


@dataclass
class BoundsReport:
    """Two-sided energy bound check for one (U, t)."""

    t: float
    measure: float
    diameter: float
    estimate: EnergyEstimate
    lower: float
    upper: float
    constant: float
    measured_constant: float
    lower_ok: bool
    upper_ok: bool

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t, 'measure': self.measure, 'diameter': self.diameter,
            'value': self.estimate.value, 'stderr': self.estimate.stderr,
            'method': self.estimate.method, 'lower': self.lower, 'upper': self.upper,
            'C1': self.constant, 'measured_constant': self.measured_constant,
            'passed': self.passed,
        }


def energy_bounds_check(space: SpaceDescriptor, U: Region, t: float,
                        estimate: Optional[EnergyEstimate] = None, **kwargs) -> BoundsReport:
    """diam(U)^-t mu(U)^2 <= I_t(mu, U) <= K diam(U)^{s-t} mu(U), K from lemma_constant.

    A lower-bound violation beyond three standard errors means an estimator
    bug and raises EstimatorError. Monte Carlo values omit pairs under the
    distance floor, at most C floor^s mu(U) of the product mass.
    """
    region = _Region(space, U)
    if region.diameter <= 0 or region.measure <= 0:
        raise InvalidParameterError('energy bounds need a region of positive diameter and measure')
    est = estimate if estimate is not None else energy(space, U, t, **kwargs)
    constant = lemma_constant(space.C, space.s, t)
    lower = region.diameter ** (-t) * region.measure ** 2
    upper = constant * region.diameter ** (space.s - t) * region.measure
    missing = region.diameter ** (-t) * region.measure * space.C * est.floor ** space.s
    slack = 3.0 * est.stderr + 1e-9 * max(lower, est.value)
    lower_ok = est.value + slack >= lower - missing
    if not lower_ok:
        raise EstimatorError('energy estimate falls below diam(U)^-t mu(U)^2',
                             t=t, value=est.value, stderr=est.stderr, lower=lower)
    upper_ok = est.value - slack <= upper
    measured = est.value / (region.diameter ** (space.s - t) * region.measure)
    return BoundsReport(t, region.measure, region.diameter, est, lower, upper, constant,
                        measured, lower_ok, upper_ok)


LAMBDA_RULES = ('power', 'shrink', 'rectangle')


@dataclass
class LambdaQuery:
    """Pairs E_n inside B_n checked over ``n_values`` with radii r_n.

    power:      E_n = B(x_n, r_n),      B_n = B(x_n, r_n^(t0/s))
    shrink:     E_n = B(x_n, c r_n),    B_n = B(x_n, r_n)
    rectangle:  E_n = prod B(x_n,i, r_n^a_i),  B_n = B(x_n, r_n)
    """

    space: SpaceDescriptor
    n_values: Sequence[int]
    radii: Sequence[float]
    rule: str = 'power'
    t0: Optional[float] = None
    shrink: float = 1.0
    exponents: Tuple[float, ...] = ()
    t_grid: Optional[Sequence[float]] = None
    grid_step: float = 0.05
    epsilon: float = 0.05
    budget: int = 50_000
    seed: int = 0
    method: str = 'auto'

    def __post_init__(self):
        if self.rule not in LAMBDA_RULES:
            raise InvalidParameterError(f'unknown lambda rule: {self.rule}')
        if len(self.n_values) == 0 or len(self.n_values) != len(self.radii):
            raise InvalidParameterError('lambda query needs one radius per checked index')
        radii = np.asarray(self.radii, dtype=float)
        if np.any(radii <= 0) or np.any(np.diff(radii) > 0):
            raise InvalidParameterError('lambda radii must be positive and non-increasing')
        if self.rule == 'power' and (self.t0 is None or not 0 < self.t0 <= self.space.s):
            raise InvalidParameterError('power rule needs 0 < t0 <= s', t0=self.t0)
        if self.rule == 'shrink' and not 0 < self.shrink <= 1:
            raise InvalidParameterError('shrink factor must lie in (0, 1]', shrink=self.shrink)
        if self.rule == 'rectangle':
            factors = getattr(self.space, 'factors', ())
            if len(factors) != len(self.exponents) or any(a < 1 for a in self.exponents):
                raise InvalidParameterError('rectangle rule needs one exponent >= 1 per factor',
                                            exponents=list(self.exponents))

    def grid(self) -> np.ndarray:
        if self.t_grid is not None:
            grid = np.asarray(self.t_grid, dtype=float)
        else:
            count = int(math.ceil(self.space.s / self.grid_step - 1e-9))
            grid = np.round(np.arange(count) * self.grid_step, 10)
        if np.any(grid < 0) or np.any(grid >= self.space.s):
            raise InvalidParameterError('t grid must lie in [0, s)')
        return np.sort(grid)

    def pair(self, center, r: float) -> Tuple[Region, Ball]:
        if self.rule == 'power':
            return Ball(center, r), Ball(center, r ** (self.t0 / self.space.s))
        if self.rule == 'shrink':
            return Ball(center, self.shrink * r), Ball(center, r)
        return Box(center, tuple(r ** a for a in self.exponents)), Ball(center, r)


@dataclass
class LambdaReport:
    """Empirical large-intersection index with its ratio table."""

    lambda_hat: Optional[float]
    status: str
    grid: List[float]
    slopes: List[float]
    bounded: List[bool]
    rows: List[Dict[str, float]] = field(default_factory=list)
    containment: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda_hat': self.lambda_hat,
            'status': self.status,
            'grid': self.grid,
            'slopes': self.slopes,
            'bounded': self.bounded,
            'containment': self.containment,
        }


def _measure_of(space: SpaceDescriptor, region: Region) -> float:
    if isinstance(region, Box):
        return space.measure_box(region.center, region.radii)
    return measure_ball(space, region)


def lambda_index(query: LambdaQuery) -> LambdaReport:
    """Classify each grid t by the log-log slope of I_t(E_n) mu(B_n) / mu(E_n)^2.

    t is bounded when the slope against log(1/r_n) is at most epsilon; the
    empirical index is the largest bounded t. Bounded values that do not form
    a prefix of the grid give an ambiguous report with no index.
    """
    space = query.space
    grid = query.grid()
    rng = stream(query.seed, TAG_LAMBDA)
    radii = np.asarray(query.radii, dtype=float)
    centers = space.sample(radii.size, rng)
    ratios = np.zeros((grid.size, radii.size))
    containment = 0.0
    rows: List[Dict[str, float]] = []
    for k, (n, r) in enumerate(zip(query.n_values, radii)):
        inner, outer = query.pair(space.take(centers, k), float(r))
        mass_e = _measure_of(space, inner)
        mass_b = measure_ball(space, outer)
        size = max(inner.radii) if isinstance(inner, Box) else inner.radius
        containment = max(containment, size / outer.radius)
        if mass_e <= 0:
            raise EstimatorError('inner set has zero measure', n=int(n), r=float(r))
        for i, t in enumerate(grid):
            est = energy(space, inner, float(t), budget=query.budget,
                         seed=derive_seed(query.seed, TAG_LAMBDA, k, i), method=query.method)
            scale = mass_b / mass_e ** 2
            ratios[i, k] = est.value * scale
            rows.append({'t': float(t), 'n': int(n), 'r_n': float(r),
                         'R_t': float(est.value * scale), 'stderr': float(est.stderr * scale)})
    logs = np.log(1.0 / radii)
    slopes = [float(np.polyfit(logs, np.log(ratios[i]), 1)[0]) for i in range(grid.size)]
    bounded = [s <= query.epsilon for s in slopes]
    first_unbounded = next((i for i, b in enumerate(bounded) if not b), len(bounded))
    if any(bounded[first_unbounded:]):
        status, lam = 'ambiguous', None
    elif first_unbounded == 0:
        status, lam = 'none-bounded', None
    else:
        status, lam = 'ok', float(grid[first_unbounded - 1])
    report = LambdaReport(lam, status, [float(t) for t in grid], slopes, bounded, rows,
                          containment=float(containment))
    logger.info(f'lambda index on {space.name} rule={query.rule}: status={status} lambda_hat={lam}')
    return report


__all__ = [
    'BoundsReport', 'EnergyEstimate', 'LambdaQuery', 'LambdaReport', 'energy',
    'distance_floor', 'energy_bounds_check', 'lambda_index', 'lemma_constant', 'potential',
]
