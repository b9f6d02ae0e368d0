"""
Model spaces with exactly computable Ahlfors-regular measures.

Points are numpy arrays. A single point of a torus(d) is a float vector of
length d in [0, 1); a symbolic or Cantor point is an integer digit vector of
the space's working depth; a product point is a tuple of factor points.
Every routine also accepts batches, i.e. arrays with extra leading axes (and
tuples of such arrays for products); distances and measures broadcast over
the leading axes.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.logging_config import get_logger
from lab.errors import InvalidInputError, InvalidParameterError
from utils.rng import TAG_AUDIT, stream

logger = get_logger(__name__)

Point = Union[np.ndarray, Tuple[np.ndarray, ...]]

DEFAULT_SYMBOLIC_DEPTH = 64
DEFAULT_CANTOR_DEPTH = 34


class SpaceDescriptor(ABC):
    """A compact Ahlfors s-regular probability space."""

    kind: str = ''

    @property
    @abstractmethod
    def s(self) -> float:
        """Regularity exponent."""

    @property
    @abstractmethod
    def C(self) -> float:
        """Declared regularity constant."""

    @property
    @abstractmethod
    def diam(self) -> float:
        """Diameter of the whole space."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Short name, also accepted by `parse_space`."""

    @property
    def resolution(self) -> float:
        """Distances below this are indistinguishable from 0."""
        return 0.0

    @abstractmethod
    def distance(self, x: Point, y: Point) -> np.ndarray:
        """Metric, broadcast over leading batch axes."""

    @abstractmethod
    def measure_radius(self, x: Point, r) -> np.ndarray:
        """mu(B(x, r)) for open balls; r may be an array."""

    @abstractmethod
    def sample(self, count: int, rng: np.random.Generator) -> Point:
        """``count`` i.i.d. mu-distributed points."""

    @abstractmethod
    def sample_in_ball(self, centers: Point, radii, rng: np.random.Generator) -> Point:
        """One mu|B(centers[i], radii[i]) draw per row."""

    @abstractmethod
    def ball_diameter(self, x: Point, r: float) -> float:
        """Diameter of B(x, r)."""

    @abstractmethod
    def root_point(self) -> Point:
        """The all-zeros point."""

    @abstractmethod
    def check_point(self, x: Point) -> None:
        """Raise InvalidInputError unless ``x`` belongs to this space."""

    def batch_size(self, x: Point) -> int:
        return int(np.asarray(x).shape[0])

    def take(self, x: Point, index) -> Point:
        """Rows ``index`` of a batch."""
        return np.asarray(x)[index]

    def to_config(self) -> Dict[str, Any]:
        return {'space': self.kind}

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TorusSpace(SpaceDescriptor):
    """R^d / Z^d with the max of coordinatewise circle distances."""

    d: int = 1
    kind = 'torus'

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameterError('torus dimension must be >= 1', d=self.d)

    @property
    def s(self) -> float:
        return float(self.d)

    @property
    def C(self) -> float:
        return float(2 ** self.d)

    @property
    def diam(self) -> float:
        return 0.5

    @property
    def name(self) -> str:
        return f'torus{self.d}'

    @property
    def resolution(self) -> float:
        """Coordinates are float64 in [0, 1)."""
        return float(np.finfo(float).eps)

    def distance(self, x, y):
        diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
        return np.minimum(diff, 1.0 - diff).max(axis=-1)

    def measure_radius(self, x, r):
        r = np.asarray(r, dtype=float)
        side = np.clip(2.0 * r, 0.0, 1.0)
        return np.where(r > 0, side ** self.d, 0.0)

    def sample(self, count, rng):
        return rng.random((count, self.d))

    def sample_in_ball(self, centers, radii, rng):
        centers = np.asarray(centers, dtype=float)
        half = np.minimum(np.asarray(radii, dtype=float), 0.5)[..., None]
        offsets = (2.0 * rng.random(centers.shape) - 1.0) * half
        return (centers + offsets) % 1.0

    def ball_diameter(self, x, r):
        return float(min(2.0 * r, 0.5)) if r > 0 else 0.0

    def root_point(self):
        return np.zeros(self.d)

    def check_point(self, x):
        arr = np.asarray(x)
        if arr.ndim < 1 or arr.shape[-1] != self.d or not np.issubdtype(arr.dtype, np.number):
            raise InvalidInputError(f'point is not a {self.name} point', shape=list(arr.shape))

    def to_config(self):
        return {'space': 'torus', 'd': self.d}


@dataclass(frozen=True)
class SymbolicSpace(SpaceDescriptor):
    """Infinite words over {0..m-1} with rho(x, y) = b^(common prefix length)."""

    m: int = 2
    b: float = 0.5
    depth: int = DEFAULT_SYMBOLIC_DEPTH
    kind = 'symbolic'

    def __post_init__(self):
        if self.m < 2:
            raise InvalidParameterError('symbolic alphabet needs m >= 2', m=self.m)
        if not 0.0 < self.b < 1.0:
            raise InvalidParameterError('symbolic ratio b must lie in (0, 1)', b=self.b)
        if self.depth < 1:
            raise InvalidParameterError('working depth must be >= 1', depth=self.depth)

    @property
    def s(self) -> float:
        return math.log(self.m) / math.log(1.0 / self.b)

    @property
    def C(self) -> float:
        return float(self.m)

    @property
    def diam(self) -> float:
        return 1.0

    @property
    def name(self) -> str:
        if self.b == 0.5:
            return f'symbolic{self.m}'
        return f'symbolic:{self.m}:{self.b:g}'

    @property
    def resolution(self) -> float:
        return self.b ** self.depth

    def prefix_length(self, x, y) -> np.ndarray:
        mismatch = np.asarray(x) != np.asarray(y)
        first = np.argmax(mismatch, axis=-1)
        return np.where(mismatch.any(axis=-1), first, self.depth)

    def distance(self, x, y):
        k = self.prefix_length(x, y)
        return np.where(k < self.depth, self.b ** k.astype(float), 0.0)

    def ball_depth(self, r) -> np.ndarray:
        """Smallest k >= 0 with b^k < r; B(x, r) is the depth-k cylinder of x."""
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        k = np.floor(np.log(safe) / math.log(self.b)) + 1
        k = np.maximum(k, 0)
        # repair rounding at exact powers of b
        k = np.where(self.b ** k >= safe, k + 1, k)
        k = np.where((k > 0) & (self.b ** (k - 1) < safe), k - 1, k)
        return k.astype(np.int64)

    def measure_radius(self, x, r):
        r = np.asarray(r, dtype=float)
        k = self.ball_depth(r)
        return np.where(r > 0, float(self.m) ** (-k.astype(float)), 0.0)

    def sample(self, count, rng):
        return rng.integers(0, self.m, size=(count, self.depth), dtype=np.int64)

    def sample_in_ball(self, centers, radii, rng):
        centers = np.asarray(centers)
        k = np.minimum(self.ball_depth(radii), self.depth)
        fresh = rng.integers(0, self.m, size=centers.shape, dtype=np.int64)
        keep = np.arange(self.depth) < np.asarray(k)[..., None]
        return np.where(keep, centers, fresh)

    def ball_diameter(self, x, r):
        if r <= 0:
            return 0.0
        k = int(self.ball_depth(r))
        return self.b ** k if k < self.depth else 0.0

    def root_point(self):
        return np.zeros(self.depth, dtype=np.int64)

    def check_point(self, x):
        arr = np.asarray(x)
        if arr.ndim < 1 or arr.shape[-1] != self.depth or not np.issubdtype(arr.dtype, np.integer):
            raise InvalidInputError(f'point is not a {self.name} word of depth {self.depth}',
                                    shape=list(arr.shape))
        if arr.size and (arr.min() < 0 or arr.max() >= self.m):
            raise InvalidInputError(f'digits must lie in 0..{self.m - 1}')

    def to_config(self):
        return {'space': 'symbolic', 'm': self.m, 'b': self.b}


@dataclass(frozen=True)
class CantorSpace(SpaceDescriptor):
    """Middle-third Cantor set, Euclidean metric, natural measure.

    Points are binary address vectors; address digit a_k stands for the
    ternary digit 2*a_k.
    """

    depth: int = DEFAULT_CANTOR_DEPTH
    kind = 'cantor3'

    @property
    def s(self) -> float:
        return math.log(2.0) / math.log(3.0)

    @property
    def C(self) -> float:
        return 4.0

    @property
    def diam(self) -> float:
        return 1.0

    @property
    def name(self) -> str:
        return 'cantor3'

    @property
    def resolution(self) -> float:
        return 3.0 ** (-self.depth)

    def values(self, x) -> np.ndarray:
        weights = 2.0 * 3.0 ** -np.arange(1, self.depth + 1, dtype=float)
        return np.asarray(x, dtype=float) @ weights

    def distance(self, x, y):
        return np.abs(self.values(x) - self.values(y))

    def cantor_function(self, y) -> np.ndarray:
        """Distribution function of the natural measure."""
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        result = np.zeros_like(y)
        done = np.zeros(y.shape, dtype=bool)
        scale = 0.5
        for _ in range(self.depth + 2):
            y3 = 3.0 * y
            in_gap = (~done) & (y3 >= 1.0) & (y3 < 2.0)
            right = (~done) & (y3 >= 2.0)
            result = np.where(in_gap | right, result + scale, result)
            done = done | in_gap
            y = np.where(right, y3 - 2.0, y3)
            scale *= 0.5
        return result

    def measure_radius(self, x, r):
        r = np.asarray(r, dtype=float)
        v = self.values(x)
        mass = self.cantor_function(v + r) - self.cantor_function(v - r)
        return np.where(r > 0, mass, 0.0)

    def sample(self, count, rng):
        return rng.integers(0, 2, size=(count, self.depth), dtype=np.int64)

    def _level_for_radius(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        level = np.floor(np.log(1.0 / safe) / math.log(3.0)).astype(np.int64)
        return np.clip(level, 0, self.depth)

    def sample_in_ball(self, centers, radii, rng):
        """Rejection from the three level-L cylinders around the center.

        With 3^-(L+1) < r <= 3^-L the ball meets at most two level-L
        cylinders, both adjacent to the center's own, and contains the
        center's level-(L+1) cylinder, so acceptance is at least 1/6.
        """
        centers = np.asarray(centers)
        radii = np.broadcast_to(np.asarray(radii, dtype=float), centers.shape[:-1])
        level = self._level_for_radius(radii)
        out = self.sample(centers.shape[0], rng)
        pending = radii < 1.0
        for _ in range(400):
            if not pending.any():
                break
            rows = np.flatnonzero(pending)
            lv = level[rows]
            prefix = np.zeros(rows.size, dtype=np.int64)
            for j in range(int(lv.max()) if rows.size else 0):
                prefix = np.where(j < lv, prefix * 2 + centers[rows, j], prefix)
            shift = rng.integers(-1, 2, size=rows.size)
            target = np.clip(prefix + shift, 0, (2 ** lv) - 1)
            tail = rng.integers(0, 2, size=(rows.size, self.depth))
            cols = np.arange(self.depth)
            head_bits = (target[:, None] >> np.maximum(lv[:, None] - 1 - cols[None, :], 0)) & 1
            candidate = np.where(cols[None, :] < lv[:, None], head_bits, tail)
            ok = np.abs(self.values(candidate) - self.values(centers[rows])) < radii[rows]
            tiny = lv >= self.depth
            candidate[tiny] = centers[rows][tiny]
            ok = ok | tiny
            accepted = rows[ok]
            out[accepted] = candidate[ok]
            pending[accepted] = False
        if pending.any():
            logger.warning(f'cantor ball sampler left {int(pending.sum())} rows at their centers')
            out[pending] = centers[pending]
        return out

    def cantor_floor(self, y: float) -> float:
        """Largest point of the Cantor set that is <= y."""
        if y >= 1.0:
            return 1.0
        if y < 0.0:
            return -math.inf
        a, length = 0.0, 1.0
        for _ in range(self.depth):
            third = length / 3.0
            if y < a + third:
                pass
            elif y < a + 2.0 * third:
                return a + third
            else:
                a += 2.0 * third
            length = third
        return a

    def cantor_ceil(self, y: float) -> float:
        """Smallest point of the Cantor set that is >= y."""
        if y <= 0.0:
            return 0.0
        if y > 1.0:
            return math.inf
        a, length = 0.0, 1.0
        for _ in range(self.depth):
            third = length / 3.0
            if y <= a + third:
                pass
            elif y < a + 2.0 * third:
                return a + 2.0 * third
            else:
                a += 2.0 * third
            length = third
        return a + length

    def ball_diameter(self, x, r):
        if r <= 0:
            return 0.0
        v = float(self.values(x))
        return max(0.0, self.cantor_floor(v + r) - self.cantor_ceil(v - r))

    def root_point(self):
        return np.zeros(self.depth, dtype=np.int64)

    def check_point(self, x):
        arr = np.asarray(x)
        if arr.ndim < 1 or arr.shape[-1] != self.depth or not np.issubdtype(arr.dtype, np.integer):
            raise InvalidInputError(f'point is not a cantor3 address of depth {self.depth}',
                                    shape=list(arr.shape))
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise InvalidInputError('cantor3 address digits must be 0 or 1')

    def to_config(self):
        return {'space': 'cantor3'}


@dataclass(frozen=True)
class ProductSpace(SpaceDescriptor):
    """Finite product with the max metric and the product measure."""

    factors: Tuple[SpaceDescriptor, ...] = ()
    kind = 'product'

    def __post_init__(self):
        if len(self.factors) < 1:
            raise InvalidParameterError('product space needs at least one factor')

    @property
    def s(self) -> float:
        return float(sum(f.s for f in self.factors))

    @property
    def C(self) -> float:
        return float(np.prod([f.C for f in self.factors]))

    @property
    def diam(self) -> float:
        return max(f.diam for f in self.factors)

    @property
    def name(self) -> str:
        return ','.join(f.name for f in self.factors)

    @property
    def resolution(self) -> float:
        return max(f.resolution for f in self.factors)

    def _split(self, x) -> Sequence[Any]:
        if not isinstance(x, tuple) or len(x) != len(self.factors):
            raise InvalidInputError(f'product point needs {len(self.factors)} factor coordinates')
        return x

    def distance(self, x, y):
        xs, ys = self._split(x), self._split(y)
        parts = [f.distance(a, c) for f, a, c in zip(self.factors, xs, ys)]
        return np.maximum.reduce(np.broadcast_arrays(*parts))

    def measure_radius(self, x, r):
        xs = self._split(x)
        parts = [f.measure_radius(a, r) for f, a in zip(self.factors, xs)]
        return np.prod(np.broadcast_arrays(*parts), axis=0)

    def measure_box(self, x, radii: Sequence[float]) -> float:
        """mu of the product of factor balls B_i(x_i, radii[i])."""
        xs = self._split(x)
        return float(np.prod([f.measure_radius(a, r) for f, a, r in zip(self.factors, xs, radii)]))

    def sample(self, count, rng):
        return tuple(f.sample(count, rng) for f in self.factors)

    def sample_in_ball(self, centers, radii, rng):
        xs = self._split(centers)
        return tuple(f.sample_in_ball(a, radii, rng) for f, a in zip(self.factors, xs))

    def sample_in_box(self, centers, radii: Sequence, rng):
        xs = self._split(centers)
        return tuple(f.sample_in_ball(a, r, rng) for f, a, r in zip(self.factors, xs, radii))

    def ball_diameter(self, x, r):
        xs = self._split(x)
        return max(f.ball_diameter(a, r) for f, a in zip(self.factors, xs))

    def root_point(self):
        return tuple(f.root_point() for f in self.factors)

    def check_point(self, x):
        for f, a in zip(self.factors, self._split(x)):
            f.check_point(a)

    def batch_size(self, x):
        return self.factors[0].batch_size(self._split(x)[0])

    def take(self, x, index):
        return tuple(f.take(a, index) for f, a in zip(self.factors, self._split(x)))

    def to_config(self):
        return {'space': 'product', 'factors': self.name}


@dataclass(frozen=True, eq=False)
class Ball:
    """Open ball B(center, radius); radius 0 is the empty set."""

    center: Any
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidInputError('ball radius must be nonnegative', radius=self.radius)

    def dilate(self, c: float) -> 'Ball':
        """cB = B(x, c r)."""
        return Ball(self.center, c * self.radius)

    def power(self, t: float, s: float) -> 'Ball':
        """B^t = B(x, r^(t/s))."""
        if self.radius == 0:
            return Ball(self.center, 0.0)
        return Ball(self.center, self.radius ** (t / s))


@dataclass(frozen=True, eq=False)
class Box:
    """Product of factor balls B_i(center_i, radii[i]) in a product space."""

    center: Tuple[Any, ...]
    radii: Tuple[float, ...]

    def __post_init__(self):
        if len(self.center) != len(self.radii):
            raise InvalidInputError('box needs one radius per factor',
                                    factors=len(self.center), radii=len(self.radii))
        if any(r < 0 for r in self.radii):
            raise InvalidInputError('box radii must be nonnegative', radii=list(self.radii))

    @property
    def empty(self) -> bool:
        return min(self.radii) <= 0


@dataclass
class AuditReport:
    """Worst regularity ratios found by `regularity_audit`."""

    space: str
    trials: int
    declared_C: float
    upper_ratio: float
    lower_ratio: float
    upper_witness: Tuple[Any, float]
    lower_witness: Tuple[Any, float]

    @property
    def worst(self) -> float:
        return max(self.upper_ratio, self.lower_ratio)

    @property
    def passed(self) -> bool:
        return self.worst <= self.declared_C * (1.0 + 1e-9)

    def to_dict(self) -> Dict[str, Any]:
        record = {
            'space': self.space,
            'trials': self.trials,
            'declared_C': self.declared_C,
            'upper_ratio': self.upper_ratio,
            'lower_ratio': self.lower_ratio,
            'worst': self.worst,
            'passed': self.passed,
        }
        if not self.passed:
            ratio, witness = ((self.upper_ratio, self.upper_witness)
                              if self.upper_ratio >= self.lower_ratio
                              else (self.lower_ratio, self.lower_witness))
            record['witness'] = {'center': _point_repr(witness[0]), 'radius': witness[1],
                                 'ratio': ratio}
        return record


def distance(space: SpaceDescriptor, x: Point, y: Point) -> np.ndarray:
    """rho(x, y); raises InvalidInputError on mismatched point kinds."""
    space.check_point(x)
    space.check_point(y)
    result = space.distance(x, y)
    return float(result) if np.ndim(result) == 0 else result


def measure_ball(space: SpaceDescriptor, ball: Ball) -> float:
    """Exact mu(B); radius 0 gives 0, radii beyond the diameter give 1."""
    if ball.radius <= 0:
        return 0.0
    return float(np.minimum(space.measure_radius(ball.center, ball.radius), 1.0))


def regularity_audit(space: SpaceDescriptor, trials: int, seed: int,
                     radius: Optional[float] = None) -> AuditReport:
    """Worst mu(B)/r^s and r^s/mu(B) over random balls with 0 < r <= diam."""
    if trials < 1:
        raise InvalidParameterError('regularity audit needs trials >= 1', trials=trials)
    rng = stream(seed, TAG_AUDIT)
    centers = space.sample(trials, rng)
    if radius is not None:
        radii = np.full(trials, float(radius))
    else:
        floor = max(space.diam * 1e-6, space.resolution * 10.0)
        lo, hi = math.log(floor), math.log(space.diam)
        radii = np.exp(lo + (hi - lo) * rng.random(trials))
    mass = np.minimum(space.measure_radius(centers, radii), 1.0)
    scale = radii ** space.s
    upper = mass / scale
    lower = scale / mass
    iu, il = int(np.argmax(upper)), int(np.argmax(lower))
    report = AuditReport(
        space=space.name,
        trials=trials,
        declared_C=space.C,
        upper_ratio=float(upper[iu]),
        lower_ratio=float(lower[il]),
        upper_witness=(space.take(centers, iu), float(radii[iu])),
        lower_witness=(space.take(centers, il), float(radii[il])),
    )
    if not report.passed:
        logger.warning(f'regularity audit failed on {space.name}: worst ratio {report.worst:.4g} '
                       f'> C = {space.C:g}')
    return report


def vitali_5r(space: SpaceDescriptor, balls: Sequence[Ball]) -> List[Ball]:
    """Greedy disjoint subfamily whose 5-dilates cover the union.

    Balls are taken by decreasing radius, ties by input order; a ball is kept
    when its center is farther than the sum of radii from every kept center.
    """
    order = sorted((i for i, b in enumerate(balls) if b.radius > 0),
                   key=lambda i: (-balls[i].radius, i))
    selected: List[Ball] = []
    for i in order:
        ball = balls[i]
        if all(float(space.distance(ball.center, kept.center)) > ball.radius + kept.radius
               for kept in selected):
            selected.append(ball)
    return selected


def check_vitali(space: SpaceDescriptor, balls: Sequence[Ball], selected: Sequence[Ball],
                 points: Point) -> Dict[str, bool]:
    """Disjointness of ``selected`` and the 5-dilate cover on sample ``points``."""
    disjoint = all(
        float(space.distance(a.center, b.center)) > a.radius + b.radius
        for i, a in enumerate(selected) for b in selected[i + 1:]
    )
    count = space.batch_size(points)
    in_union = np.zeros(count, dtype=bool)
    for ball in balls:
        if ball.radius > 0:
            in_union |= space.distance(points, ball.center) < ball.radius
    in_cover = np.zeros(count, dtype=bool)
    for ball in selected:
        in_cover |= space.distance(points, ball.center) < 5.0 * ball.radius
    return {'disjoint': bool(disjoint), 'covered': bool(np.all(in_cover[in_union]))}


def parse_space(name: str, b: Optional[float] = None) -> SpaceDescriptor:
    """Build a space from its short name.

    ``torus<d>``, ``symbolic<m>`` (b = 1/2 unless given), ``symbolic:<m>:<b>``,
    ``cantor3`` and comma-separated products such as ``torus1,torus1``.
    """
    text = name.strip().lower()
    if ',' in text:
        return ProductSpace(tuple(parse_space(part, b) for part in text.split(',')))
    if text.startswith('torus'):
        digits = text[len('torus'):] or '1'
        if not digits.isdigit():
            raise InvalidInputError(f'unknown space: {name}')
        return TorusSpace(int(digits))
    if text.startswith('symbolic'):
        rest = text[len('symbolic'):]
        if rest.startswith(':'):
            parts = rest[1:].split(':')
            m = int(parts[0])
            ratio = float(parts[1]) if len(parts) > 1 else (b or 0.5)
            return SymbolicSpace(m, ratio)
        m = int(rest) if rest.isdigit() else 2
        return SymbolicSpace(m, b if b is not None else 0.5)
    if text in ('cantor3', 'cantor'):
        return CantorSpace()
    raise InvalidInputError(f'unknown space: {name}')


def space_from_config(values: Dict[str, Any]) -> SpaceDescriptor:
    """Build a space from structured config keys (``space``, ``d``, ``m``, ``b``, ``factors``)."""
    kind = str(values.get('space', 'torus1')).lower()
    if kind == 'torus':
        return TorusSpace(int(values.get('d', 1)))
    if kind == 'symbolic':
        return SymbolicSpace(int(values.get('m', 2)), float(values.get('b', 0.5)))
    if kind == 'product':
        if not values.get('factors'):
            raise InvalidInputError('product space needs factors, e.g. factors = torus1,torus1')
        return parse_space(str(values['factors']), values.get('b'))
    return parse_space(kind, values.get('b'))


def _point_repr(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_point_repr(part) for part in x]
    arr = np.asarray(x)
    if np.issubdtype(arr.dtype, np.integer):
        return ''.join(str(int(d)) for d in arr[:16])
    return [float(v) for v in arr.ravel()]
