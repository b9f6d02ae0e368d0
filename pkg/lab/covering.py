"""
Random covering sets E = limsup B(xi_n, r_n).

Centers are streamed in fixed-size chunks so that a million balls never sit
in memory at once; each chunk is folded into per-window cube unions and into
the scale-matched generations used for dimension counting.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config.logging_config import get_logger
from lab.cubes import CubeSet, CubeTree, build_tree, union_of_boxes
from lab.dimension import DimReport, dyadic_windows, generation_dimension
from lab.errors import (
    InconclusiveScheduleError,
    InvalidParameterError,
    PreconditionError,
    UndefinedDimensionError,
    UnsupportedModelError,
)
from lab.netcontent import li_certificate
from lab.spaces import SpaceDescriptor, TorusSpace
from utils.rng import TAG_CENTERS, stream

logger = get_logger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
CENTER_CHUNK = 1 << 16
CHI2_CRITICAL_DF9 = 27.877  # chi-square, 9 degrees of freedom, significance 1e-3
MIN_EXPLICIT = 16
SCHEDULE_KINDS = ('power', 'exponential', 'logPower', 'explicit')


@dataclass(frozen=True)
class RadiusSchedule:
    """Positive radii r_n decreasing to zero."""

    kind: str
    alpha: float = 1.0
    beta: float = 0.0
    c: float = 1.0
    scale: float = 1.0
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InvalidParameterError(f'unknown radius schedule: {self.kind}')
        if self.scale <= 0:
            raise InvalidParameterError('schedule scale must be positive', scale=self.scale)
        if self.kind in ('power', 'logPower') and self.alpha <= 0:
            raise InvalidParameterError('power schedules need alpha > 0', alpha=self.alpha)
        if self.kind == 'logPower' and self.beta < 0:
            raise InvalidParameterError('log-power schedules need beta >= 0', beta=self.beta)
        if self.kind == 'exponential' and self.c <= 0:
            raise InvalidParameterError('exponential schedules need c > 0', c=self.c)
        if self.kind == 'explicit':
            v = np.asarray(self.values, dtype=float)
            if v.size == 0 or np.any(v <= 0) or np.any(np.diff(v) > 0):
                raise InvalidParameterError('explicit radii must be positive and non-increasing')

    @classmethod
    def power(cls, alpha: float, scale: float = 1.0) -> 'RadiusSchedule':
        return cls('power', alpha=alpha, scale=scale)

    @classmethod
    def exponential(cls, c: float) -> 'RadiusSchedule':
        return cls('exponential', c=c)

    @classmethod
    def log_power(cls, alpha: float, beta: float) -> 'RadiusSchedule':
        return cls('logPower', alpha=alpha, beta=beta)

    @classmethod
    def explicit(cls, values: Sequence[float]) -> 'RadiusSchedule':
        return cls('explicit', values=tuple(float(v) for v in values))

    @classmethod
    def parse(cls, text: str) -> 'RadiusSchedule':
        """``power:2``, ``exponential:1``, ``logPower:1:2`` or ``explicit:0.5:0.25:...``."""
        head, *args = text.strip().split(':')
        try:
            nums = [float(a) for a in args]
        except ValueError:
            raise InvalidParameterError(f'bad radius schedule: {text}')
        if head == 'power' and len(nums) in (1, 2):
            return cls.power(*nums)
        if head == 'exponential' and len(nums) == 1:
            return cls.exponential(nums[0])
        if head == 'logPower' and len(nums) == 2:
            return cls.log_power(*nums)
        if head == 'explicit' and nums:
            return cls.explicit(nums)
        raise InvalidParameterError(f'bad radius schedule: {text}')

    def radii(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if np.any(n < 1):
            raise InvalidParameterError('schedule indices start at 1')
        if self.kind == 'power':
            return self.scale * n ** (-self.alpha)
        if self.kind == 'exponential':
            return self.scale * np.exp(-self.c * n)
        if self.kind == 'logPower':
            m = np.maximum(n, 2.0)
            return self.scale * m ** (-self.alpha) * np.log(m) ** (-self.beta)
        if np.any(n > len(self.values)):
            raise InvalidParameterError('index beyond the explicit schedule', length=len(self.values))
        return self.scale * np.asarray(self.values)[n.astype(np.int64) - 1]

    def radius(self, n: int) -> float:
        return float(self.radii(np.array([n]))[0])

    def s0(self) -> float:
        return critical_exponent(self)[0]

    def describe(self) -> Dict[str, Any]:
        if self.kind == 'power':
            return {'schedule': 'power', 'alpha': self.alpha, 'scale': self.scale}
        if self.kind == 'exponential':
            return {'schedule': 'exponential', 'c': self.c}
        if self.kind == 'logPower':
            return {'schedule': 'logPower', 'alpha': self.alpha, 'beta': self.beta}
        return {'schedule': 'explicit', 'length': len(self.values)}


def critical_exponent(schedule: RadiusSchedule) -> Tuple[float, str]:
    """s0 = inf{t >= 0 : sum r_n^t < inf} with a note on how it was obtained."""
    if schedule.kind in ('power', 'logPower'):
        return 1.0 / schedule.alpha, 'closed form'
    if schedule.kind == 'exponential':
        return 0.0, 'closed form'
    values = np.asarray(schedule.values, dtype=float)
    if values.size < MIN_EXPLICIT:
        raise InconclusiveScheduleError('explicit schedule too short to classify',
                                        length=int(values.size))
    n = np.arange(1, values.size + 1, dtype=float)
    tail = slice(values.size // 2, None)
    y = np.log(values[tail])
    fits = {}
    for name, x in (('power', np.log(n[tail])), ('exponential', n[tail])):
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        sst = float(np.sum((y - y.mean()) ** 2))
        fits[name] = (float(slope), 1.0 - float(np.sum(resid ** 2)) / sst if sst > 0 else 0.0)
    best = max(fits, key=lambda k: fits[k][1])
    slope, r2 = fits[best]
    if slope >= 0 or r2 < 0.99:
        raise InconclusiveScheduleError('explicit schedule fits neither a power nor an exponential law',
                                        power_r2=fits['power'][1], exponential_r2=fits['exponential'][1])
    if best == 'exponential':
        return 0.0, f'exponential tail fit, r2={r2:.4f}'
    return -1.0 / slope, f'power tail fit over {values.size - values.size // 2} terms, r2={r2:.4f}'


def sum_diverges(schedule: RadiusSchedule, s: float) -> bool:
    """Whether sum r_n^s diverges."""
    if schedule.kind == 'power':
        return schedule.alpha * s <= 1.0
    if schedule.kind == 'exponential':
        return False
    if schedule.kind == 'logPower':
        product = schedule.alpha * s
        return product < 1.0 or (abs(product - 1.0) < 1e-12 and schedule.beta * s <= 1.0)
    value, _ = critical_exponent(schedule)
    if abs(value - s) < 1e-9:
        raise InconclusiveScheduleError('explicit schedule sits at the critical exponent')
    return value > s


def _rotate_refresh(fresh: np.ndarray, refresh: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """xi_n = fresh[L] + (n - L) theta mod 1, L the last refresh step at or before n."""
    steps = np.arange(refresh.shape[-1])
    last = np.maximum.accumulate(np.where(refresh, steps, -1), axis=-1)
    base = np.take_along_axis(fresh, last[..., None].repeat(fresh.shape[-1], axis=-1), axis=-2)
    return (base + (steps - last)[..., None] * theta) % 1.0


@dataclass(frozen=True)
class CenterProcess:
    """Stationary centers with uniform marginal.

    ``iid`` draws independent uniform points. ``markov`` (tori only) keeps
    the previous point rotated by a fixed irrational step, or with
    probability ``refresh`` jumps to a fresh uniform point; it is
    exponentially mixing with c = 1 and gamma = 1 - refresh.
    """

    kind: str = 'iid'
    refresh: float = 0.5
    rotation: float = GOLDEN

    def __post_init__(self):
        if self.kind not in ('iid', 'markov'):
            raise InvalidParameterError(f'unknown center process: {self.kind}')
        if self.kind == 'markov' and not 0 < self.refresh < 1:
            raise InvalidParameterError('refresh probability must lie in (0, 1)', refresh=self.refresh)

    @property
    def mixing_constants(self) -> Tuple[float, float]:
        return (1.0, 1.0 - self.refresh) if self.kind == 'markov' else (0.0, 0.0)

    def _theta(self, d: int) -> np.ndarray:
        return np.array([(self.rotation * (i + 1)) % 1.0 for i in range(d)])

    def _check_space(self, space: SpaceDescriptor) -> None:
        if self.kind == 'markov' and not isinstance(space, TorusSpace):
            raise UnsupportedModelError('the rotation-refresh process lives on tori')

    def chunks(self, space: SpaceDescriptor, n_max: int, seed: int,
               size: int = CENTER_CHUNK) -> Iterator[Tuple[int, Any]]:
        """(first index n, centers) blocks covering n = 1..n_max."""
        self._check_space(space)
        if self.kind == 'iid':
            for j, start in enumerate(range(1, n_max + 1, size)):
                count = min(size, n_max - start + 1)
                yield start, space.sample(count, stream(seed, TAG_CENTERS, j))
            return
        rng = stream(seed, TAG_CENTERS)
        theta = self._theta(space.d)
        previous = None
        for start in range(1, n_max + 1, size):
            count = min(size, n_max - start + 1)
            fresh = rng.random((count, space.d))
            flags = rng.random(count) < self.refresh
            if previous is None:
                flags[0] = True
                points = _rotate_refresh(fresh, flags, theta)
            else:
                fresh = np.vstack([previous[None, :], fresh])
                flags = np.concatenate([[True], flags])
                points = _rotate_refresh(fresh, flags, theta)[1:]
            previous = points[-1]
            yield start, points

    def sample(self, space: SpaceDescriptor, n_max: int, seed: int) -> Any:
        parts = [pts for _, pts in self.chunks(space, n_max, seed)]
        if isinstance(parts[0], tuple):
            return tuple(np.concatenate(p) for p in zip(*parts))
        return np.concatenate(parts)

    def chains(self, space: TorusSpace, chains: int, length: int, seed: int) -> np.ndarray:
        """Independent sequences xi_1..xi_length, shape (chains, length, d)."""
        self._check_space(space)
        rng = stream(seed, TAG_CENTERS, 1 << 16)
        fresh = rng.random((chains, length, space.d))
        if self.kind == 'iid':
            return fresh
        flags = rng.random((chains, length)) < self.refresh
        flags[:, 0] = True
        return _rotate_refresh(fresh, flags, self._theta(space.d))

    def describe(self) -> Dict[str, Any]:
        if self.kind == 'iid':
            return {'centers': 'iid'}
        c, gamma = self.mixing_constants
        return {'centers': 'markov', 'refresh': self.refresh, 'c': c, 'gamma': gamma}


Shape = Callable[[np.ndarray], List[np.ndarray]]


@dataclass
class LimsupRealization:
    """Window unions, their intersection and the scale-matched generations."""

    level: int
    windows: List[Tuple[int, int]]
    window_sets: List[CubeSet]
    approx: CubeSet
    tail: CubeSet
    generations: Dict[int, CubeSet] = field(default_factory=dict)


def ball_shape(tree: CubeTree) -> Shape:
    return lambda r: [r] * len(tree.axes)


def stream_limsup(tree: CubeTree, process: CenterProcess, schedule: RadiusSchedule, n_max: int,
                  level: int, windows: int, seed: int, shape: Optional[Shape] = None,
                  scale: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  generation_levels: Sequence[int] = ()) -> LimsupRealization:
    """One pass over the centers building window sets and generations.

    ``shape`` turns radii into per-axis radii (balls by default); ``scale``
    gives the size that assigns a set to a generation (the radius by default).
    """
    tree.check_level(level)
    shape = shape or ball_shape(tree)
    scale = scale or (lambda r: r)
    groups = [(int(w[0]), int(w[-1])) for w in dyadic_windows(1, n_max, windows)]
    hits: List[List[np.ndarray]] = [[] for _ in groups]
    gens: Dict[int, List[np.ndarray]] = {int(g): [] for g in generation_levels}
    space = tree.space
    for start, points in process.chunks(space, n_max, seed):
        count = space.batch_size(points)
        ns = np.arange(start, start + count)
        radii = schedule.radii(ns)
        for w, (lo, hi) in enumerate(groups):
            mask = (ns >= lo) & (ns <= hi)
            if mask.any():
                sel = np.flatnonzero(mask)
                found = union_of_boxes(tree, space.take(points, sel), shape(radii[sel]), level, 'outer')
                hits[w].append(found.indices)
        if gens:
            sizes = scale(radii)
            for g in gens:
                mask = (sizes <= tree.b ** g) & (sizes > tree.b ** (g + 1))
                if mask.any():
                    sel = np.flatnonzero(mask)
                    found = union_of_boxes(tree, space.take(points, sel), shape(radii[sel]), g, 'outer')
                    gens[g].append(found.indices)
    window_sets = [CubeSet(tree, level, np.concatenate(h) if h else None) for h in hits]
    approx = window_sets[0]
    tail = window_sets[0]
    for ws in window_sets[1:]:
        approx = approx.intersect(ws)
        tail = tail.union(ws)
    generations = {g: CubeSet(tree, g, np.concatenate(v) if v else None) for g, v in gens.items()}
    return LimsupRealization(level, groups, window_sets, approx, tail, generations)


def simulate_covering(space: SpaceDescriptor, process: CenterProcess, schedule: RadiusSchedule,
                      n_max: int, level: int, windows: int = 4, seed: int = 0,
                      tree: Optional[CubeTree] = None) -> LimsupRealization:
    """Outer cube approximations of the last window unions and their intersection."""
    tree = tree or build_tree(space, max_level=level)
    return stream_limsup(tree, process, schedule, n_max, level, windows, seed)


def _arc_union_length(centers: np.ndarray, radii: np.ndarray) -> float:
    if radii.size == 0:
        return 0.0
    if np.any(2.0 * radii >= 1.0):
        return 1.0
    lo = (centers - radii) % 1.0
    hi = lo + 2.0 * radii
    wrap = hi > 1.0
    starts = np.concatenate([lo, np.zeros(int(wrap.sum()))])
    ends = np.concatenate([np.minimum(hi, 1.0), hi[wrap] - 1.0])
    order = np.argsort(starts, kind='stable')
    starts, ends = starts[order], ends[order]
    reach = np.maximum.accumulate(ends)
    prior = np.concatenate([[-np.inf], reach[:-1]])
    return float(np.sum(np.maximum(0.0, ends - np.maximum(starts, prior))))


def tail_union_measure(space: SpaceDescriptor, process: CenterProcess, schedule: RadiusSchedule,
                       n_max: int, marks: Sequence[int], seed: int = 0,
                       level: int = 12, tree: Optional[CubeTree] = None) -> Dict[int, float]:
    """mu(union of B_n for m <= n <= n_max) for each mark m.

    Exact interval merging on the circle; outer cube resolution elsewhere.
    """
    marks = sorted(int(m) for m in marks if 1 <= m <= n_max)
    if not marks:
        return {}
    exact = isinstance(space, TorusSpace) and space.d == 1
    if not exact:
        tree = tree or build_tree(space, max_level=level)
    first = marks[0]
    kept_n, kept_x = [], []
    partial: Dict[int, List[np.ndarray]] = {m: [] for m in marks}
    for start, points in process.chunks(space, n_max, seed):
        count = space.batch_size(points)
        ns = np.arange(start, start + count)
        sel = np.flatnonzero(ns >= first)
        if sel.size == 0:
            continue
        if exact:
            kept_n.append(ns[sel])
            kept_x.append(np.asarray(points)[sel, 0])
            continue
        radii = schedule.radii(ns)
        for m in marks:
            pick = np.flatnonzero(ns >= m)
            if pick.size:
                found = union_of_boxes(tree, space.take(points, pick), ball_shape(tree)(radii[pick]),
                                       level, 'outer')
                partial[m].append(found.indices)
    result = {}
    if exact:
        ns = np.concatenate(kept_n)
        xs = np.concatenate(kept_x)
        radii = schedule.radii(ns)
        for m in marks:
            pick = ns >= m
            result[m] = _arc_union_length(xs[pick], radii[pick])
    else:
        for m in marks:
            result[m] = CubeSet(tree, level, np.concatenate(partial[m]) if partial[m] else None).measure
    return result


@dataclass
class DichotomyReport:
    """Full-measure vs null branch of the covering dichotomy."""

    branch: str
    tail_measures: Dict[int, float]
    approx_measure: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'branch': self.branch,
                'tail_measures': {str(k): v for k, v in self.tail_measures.items()},
                'approx_measure': self.approx_measure, 'passed': self.passed}


def covering_dichotomy(space: SpaceDescriptor, process: CenterProcess, schedule: RadiusSchedule,
                       n_max: int, level: int = 12, seed: int = 0, windows: int = 4,
                       marks: Sequence[int] = (100, 1000, 10000), full_threshold: float = 0.95,
                       tree: Optional[CubeTree] = None) -> DichotomyReport:
    """sum r_n^s = inf: the window intersection is (nearly) everything;
    sum r_n^s < inf: the tail unions shrink toward zero."""
    tree = tree or build_tree(space, max_level=level)
    divergent = sum_diverges(schedule, space.s)
    realization = stream_limsup(tree, process, schedule, n_max, level, windows, seed)
    tails = tail_union_measure(space, process, schedule, n_max, marks, seed, level, tree)
    values = [tails[m] for m in sorted(tails)]
    if divergent:
        passed = realization.approx.measure >= full_threshold
    else:
        trend = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        passed = len(values) >= 2 and trend and values[-1] < values[0]
    report = DichotomyReport('full' if divergent else 'null', tails, realization.approx.measure, passed)
    logger.info(f'covering dichotomy on {space.name}: branch={report.branch} passed={passed}')
    return report


@dataclass
class CoveringReport:
    seed: int
    s0: float
    expected: float
    dim: DimReport
    measure: float
    tolerance: float
    certificate: Dict[str, Any]
    process: Dict[str, Any]
    schedule: Dict[str, Any]

    @property
    def in_tolerance(self) -> bool:
        return abs(self.dim.slope - self.expected) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed, 's0': self.s0, 'expected': self.expected,
            'dim': self.dim.to_dict(), 'measure': self.measure, 'tolerance': self.tolerance,
            'in_tolerance': self.in_tolerance, 'certificate': self.certificate,
            'upper_bound_basis': 'folklore',
            **self.process, **self.schedule,
        }


def generation_levels(tree: CubeTree, schedule: RadiusSchedule, n_max: int,
                      levels: Tuple[int, int], exponent: float = 1.0) -> List[int]:
    """Levels whose whole scale band [b^(l+1), b^l] is reached by n <= n_max."""
    smallest = schedule.radius(n_max) ** exponent
    return [g for g in range(levels[0], levels[1] + 1) if smallest <= tree.b ** (g + 1)]


def covering_dimension_experiment(space: SpaceDescriptor, process: CenterProcess,
                                  schedule: RadiusSchedule, n_max: int,
                                  levels: Tuple[int, int] = (6, 14), seed: int = 0,
                                  windows: int = 4, tolerance: float = 0.15,
                                  certificate_depth: int = 6,
                                  tree: Optional[CubeTree] = None) -> CoveringReport:
    """Dimension of the windowed covering set against min(s, s0), plus a certificate at 0.8 s0.

    The limsup is cut to the last ``windows`` dyadic blocks [2^k, 2^(k+1)) up to
    ``n_max``; earlier indices are dropped, so the set is the tail of the sequence.
    """
    s0 = schedule.s0()
    if s0 <= 0:
        raise PreconditionError('covering dimension needs s0 > 0', s0=s0)
    lo, hi = levels
    tree = tree or build_tree(space, max_level=hi)
    gens = generation_levels(tree, schedule, n_max, levels)
    realization = stream_limsup(tree, process, schedule, n_max, hi, windows, seed,
                                generation_levels=gens)
    if realization.approx.is_empty():
        raise UndefinedDimensionError('covering approximation is empty', seed=seed)
    dim = generation_dimension(tree, realization.approx, realization.generations)
    t_cert = min(0.8 * s0, space.s)
    cert = li_certificate(tree, realization.approx, t_cert, min(certificate_depth, hi))
    report = CoveringReport(
        seed=seed, s0=s0, expected=min(space.s, s0), dim=dim,
        measure=realization.approx.measure, tolerance=tolerance,
        certificate=cert.to_dict(tree.branching), process=process.describe(),
        schedule=schedule.describe(),
    )
    logger.info(f'covering seed={seed}: s0={s0:g} dim={dim.slope:.4f} expected={report.expected:g}')
    return report


def stationarity_check(space: TorusSpace, process: CenterProcess, seed: int,
                       lags: Sequence[int] = (1, 10, 100), chains: int = 10_000) -> Dict[int, Dict[str, Any]]:
    """Chi-square uniformity of xi_n (first coordinate, 10 bins) across independent chains."""
    paths = process.chains(space, chains, max(lags), seed)
    result = {}
    for lag in lags:
        counts, _ = np.histogram(paths[:, lag - 1, 0], bins=10, range=(0.0, 1.0))
        expected = chains / 10.0
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        result[int(lag)] = {'chi2': chi2, 'passed': chi2 < CHI2_CRITICAL_DF9}
    return result


def mixing_profile(space: TorusSpace, process: CenterProcess, seed: int,
                   lags: Sequence[int] = (1, 2, 4, 8, 16), chains: int = 20_000,
                   arc: Tuple[float, float] = (0.0, 0.5)) -> Dict[int, float]:
    """|P(xi_1 in A | xi_(n+1) in A) - mu(A)| per lag n for an arc A."""
    paths = process.chains(space, chains, max(lags) + 1, seed)[..., 0]
    lo, hi = arc
    first = (paths[:, 0] >= lo) & (paths[:, 0] < hi)
    width = hi - lo
    profile = {}
    for lag in lags:
        later = (paths[:, lag] >= lo) & (paths[:, lag] < hi)
        conditional = float(first[later].mean()) if later.any() else width
        profile[int(lag)] = abs(conditional - width)
    return profile


__all__ = [
    'CenterProcess', 'CoveringReport', 'DichotomyReport', 'LimsupRealization', 'RadiusSchedule',
    'covering_dichotomy', 'covering_dimension_experiment', 'critical_exponent',
    'generation_levels', 'mixing_profile', 'simulate_covering', 'stationarity_check',
    'stream_limsup', 'sum_diverges', 'tail_union_measure',
]
