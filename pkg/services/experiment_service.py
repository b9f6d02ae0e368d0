"""
Experiment Service

Runs one experiment kind over a list of seeds and gathers JSON-ready
records, CSV plot series and summary lines. Seeds run on a thread pool;
records come back sorted by seed.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from config.settings import Config, get_config
from lab.covering import (
    CenterProcess,
    RadiusSchedule,
    covering_dimension_experiment,
    stream_limsup,
)
from lab.cubes import audit_tree, build_tree
from lab.dimension import intersection_lab, random_permutations, random_translations
from lab.energy import LambdaQuery, energy, energy_bounds_check, lambda_index
from lab.errors import InvalidInputError, InvalidParameterError
from lab.netcontent import li_certificate, net_content
from lab.randfractal import (
    BlockCoupled,
    Independent,
    RandomFractalModel,
    SplitSurvival,
    UniformSurvival,
    fractal_dimension_experiment,
    simulate_level,
)
from lab.rectangles import (
    LAMBDA_INDICES, RectangleSpec, rectangle_dimension_experiment, rectangle_exponent, rectangle_lambda,
)
from lab.spaces import Ball, TorusSpace, parse_space, regularity_audit, space_from_config
from repositories.result_repository import ResultRepository
from services.base_service import BaseService, ServiceResult
from utils.rng import seed_list
from utils.thread_safe_state import ResultBuffer


@dataclass
class ExperimentOutcome:
    """Records, plot series and summary lines of one run."""

    kind: str
    records: List[Dict[str, Any]]
    series: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    summary: List[str] = field(default_factory=list)
    passed: Optional[bool] = None


def _fmt(value: Optional[float]) -> str:
    return 'n/a' if value is None else f'{value:.4g}'


def _median(values: List[float]) -> Optional[float]:
    return float(median(values)) if values else None


class ExperimentService(BaseService):
    """Service for running workbench experiments"""

    def __init__(self, config: Optional[Config] = None):
        super().__init__()
        self.config = config or get_config()

    # ------------------------------------------------------------------
    # plumbing

    def seeds(self, params: Dict[str, Any]) -> List[int]:
        base = int(params.get('seed', self.config.DEFAULT_SEED))
        count = int(params.get('seeds', 1))
        return [base] if count == 1 else seed_list(base, count)

    def run_seeds(self, seeds: List[int], task: Callable[[int], Dict[str, Any]]) -> List[Dict[str, Any]]:
        """Run ``task`` per seed on up to THREADS workers; records sorted by seed."""
        buffer = ResultBuffer()

        def work(seed: int) -> None:
            buffer.add(seed, task(seed))

        workers = max(1, min(self.config.THREADS, len(seeds)))
        if workers == 1:
            for seed in seeds:
                work(seed)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for future in [pool.submit(work, seed) for seed in seeds]:
                    future.result()
        return buffer.drain()

    def _space(self, params: Dict[str, Any], default: str = 'torus1'):
        return space_from_config({'space': default, **params})

    def _tree(self, space, params: Dict[str, Any], level: Optional[int] = None):
        max_level = level if level is not None else params.get('max_level', self.config.MAX_LEVEL)
        return build_tree(space, params.get('b'), max_level=int(max_level))

    def run(self, kind: str, params: Dict[str, Any]) -> ServiceResult:
        """Dispatch to the experiment named ``kind``."""
        handler = getattr(self, f'run_{kind}', None)
        if handler is None:
            return ServiceResult.fail(f'unknown experiment kind: {kind}', status_code=2)
        return self.guarded(kind, lambda: handler(params), **{k: v for k, v in params.items()
                                                              if k not in ('out', 'config')})

    # ------------------------------------------------------------------
    # experiments

    def run_audit(self, params: Dict[str, Any]) -> ExperimentOutcome:
        space = self._space(params)
        trials = int(params.get('trials', 2_000 if params.get('quick') else 10_000))
        levels = int(params.get('levels', 8 if params.get('quick') else 12))
        tree = self._tree(space, params, max(levels, 1))

        def task(seed: int) -> Dict[str, Any]:
            regularity = regularity_audit(space, trials, seed)
            cubes = audit_tree(tree, seed=seed, levels=levels)
            return {'kind': 'audit', 'seed': seed, 'space': space.name,
                    'regularity': regularity.to_dict(), 'tree': cubes.to_dict(),
                    'passed': bool(regularity.passed and cubes.passed)}

        records = self.run_seeds(self.seeds(params), task)
        passed = all(r['passed'] for r in records)
        summary = [f"audit space={space.name} C={space.C:g} s={space.s:g} "
                   f"worst={_fmt(max(r['regularity']['worst'] for r in records))} passed={passed}"]
        return ExperimentOutcome('audit', records, {}, summary, passed)

    def run_energy(self, params: Dict[str, Any]) -> ExperimentOutcome:
        space = self._space(params)
        t = float(params.get('t', 0.5))
        radius = params.get('radius')
        region = None if radius is None else Ball(space.root_point(), float(radius))
        budget = int(params.get('budget', self.config.ENERGY_BUDGET // (4 if params.get('quick') else 1)))
        method = params.get('method', 'auto')
        sampler = params.get('sampler', 'shell')
        shards = int(params.get('shards', self.config.ENERGY_SHARDS))
        tree = self._tree(space, params) if 'max_level' in params else None

        def task(seed: int) -> Dict[str, Any]:
            est = energy(space, region, t, budget=budget, seed=seed, method=method,
                         sampler=sampler, shards=shards, tree=tree)
            bounds = energy_bounds_check(space, region, t, estimate=est)
            return {'kind': 'energy', 'seed': seed, 'space': space.name, 'radius': radius,
                    **est.to_dict(), 'bounds': bounds.to_dict()}

        records = self.run_seeds(self.seeds(params), task)
        series = {'energy': [{'seed': r['seed'], 't': r['t'], 'value': r['value'],
                              'stderr': r['stderr']} for r in records]}
        passed = all(r['bounds']['passed'] for r in records)
        summary = [f"energy space={space.name} t={t:g} value={_fmt(_median([r['value'] for r in records]))} "
                   f"method={records[0]['method']} resampled_rate={_fmt(max(r['resampled_rate'] for r in records))} "
                   f"bounds_passed={passed}"]
        return ExperimentOutcome('energy', records, series, summary, passed)

    def run_lambda(self, params: Dict[str, Any]) -> ExperimentOutcome:
        rule = params.get('rule', 'power')
        step = float(params.get('grid_step', 0.05))
        epsilon = float(params.get('epsilon', self.config.SLOPE_EPSILON))
        budget = int(params.get('budget', 10_000 if params.get('quick') else 50_000))
        alpha = float(params.get('alpha', 1.0))

        if rule == 'rectangle':
            spec = self._rect_spec(params, default_alpha=0.5)
            expected = rectangle_exponent(spec).value

            def task(seed: int) -> Dict[str, Any]:
                report = rectangle_lambda(spec, seed=seed, budget=budget, grid_step=step,
                                          epsilon=epsilon)
                return {'kind': 'lambda', 'seed': seed, 'rule': rule, 'expected': expected,
                        **report.to_dict(), 'rows': report.rows}
        else:
            space = self._space(params)
            schedule = RadiusSchedule.power(alpha)
            radii = [float(r) for r in schedule.radii(np.asarray(LAMBDA_INDICES))]
            t0 = float(params.get('t0', 0.5 * space.s))
            expected = t0 if rule == 'power' else space.s

            def task(seed: int) -> Dict[str, Any]:
                query = LambdaQuery(space, list(LAMBDA_INDICES), radii, rule=rule, t0=t0,
                                    shrink=float(params.get('shrink', 0.5)), grid_step=step,
                                    epsilon=epsilon, budget=budget, seed=seed)
                report = lambda_index(query)
                return {'kind': 'lambda', 'seed': seed, 'rule': rule, 'expected': expected,
                        **report.to_dict(), 'rows': report.rows}

        records = self.run_seeds(self.seeds(params), task)
        series = {'lambda_ratios': [dict(seed=r['seed'], **row) for r in records for row in r['rows']]}
        for r in records:
            del r['rows']
        hits = [r['lambda_hat'] is not None and abs(r['lambda_hat'] - r['expected']) <= step + 1e-9
                for r in records]
        passed = all(hits)
        summary = [f"lambda rule={rule} expected={expected:g} "
                   f"lambda_hat={_fmt(_median([r['lambda_hat'] for r in records if r['lambda_hat'] is not None]))} "
                   f"within_step={passed}"]
        return ExperimentOutcome('lambda', records, series, summary, passed)

    def run_netcontent(self, params: Dict[str, Any]) -> ExperimentOutcome:
        space = self._space(params, 'symbolic2')
        t = float(params.get('t', 0.5 * space.s))
        depth = int(params.get('depth', 4))
        level = int(params.get('level', 10))
        tree = self._tree(space, params, level)
        source = params.get('input')
        fixed = None
        if source:
            fixed = ResultRepository(Path.cwd()).read_cubeset(source, tree)
            if fixed is None:
                raise InvalidInputError(f'cube set file not readable: {source}')

        def task(seed: int) -> Dict[str, Any]:
            F = fixed
            if F is None:
                model = RandomFractalModel(UniformSurvival(float(params.get('gamma', 0.5))), seed=seed)
                F = simulate_level(model, tree, level)
            result = net_content(tree, F, t)
            cert = li_certificate(tree, F, t, min(depth, F.level))
            return {'kind': 'netcontent', 'seed': seed, 'space': space.name, 'level': F.level,
                    'cubes': len(F), 'measure': F.measure, 'value': result.value,
                    'cover_size': len(result.cover), 'certificate': cert.to_dict(tree.branching)}

        records = self.run_seeds(self.seeds(params), task)
        series = {'certificate': [{'seed': r['seed'], 'level': int(k), 'min_c': v}
                                  for r in records for k, v in r['certificate']['minCByLevel'].items()]}
        summary = [f"netcontent space={space.name} t={t:g} value={_fmt(_median([r['value'] for r in records]))} "
                   f"minC={_fmt(min(r['certificate']['minC'] for r in records))}"]
        return ExperimentOutcome('netcontent', records, series, summary, None)

    def run_fractal(self, params: Dict[str, Any]) -> ExperimentOutcome:
        space = self._space(params, 'symbolic2')
        levels = params.get('levels', (1, 10 if params.get('quick') else 14))
        tree = self._tree(space, params, max(levels[1], 1))
        gamma = float(params.get('gamma', 0.5))
        survival = (SplitSurvival(gamma, float(params['gamma_hi'])) if 'gamma_hi' in params
                    else UniformSurvival(gamma))
        delta = float(params.get('delta', 0.0))
        dependence = BlockCoupled(delta) if delta > 0 else Independent()
        windows = int(params.get('windows', self.config.WINDOW_COUNT))
        epsilon = float(params.get('epsilon', self.config.CORRELATION_EPSILON))

        def task(seed: int) -> Dict[str, Any]:
            model = RandomFractalModel(survival, dependence, seed)
            report = fractal_dimension_experiment(model, tree, levels, windows,
                                                  self.config.DIM_TOLERANCE, epsilon)
            return {'kind': 'fractal', 'space': space.name, **model.describe(), **report.to_dict()}

        records = self.run_seeds(self.seeds(params), task)
        dims = [r['dim']['slope'] for r in records if r['dim'] is not None]
        series = {'fractal_counts': [{'seed': r['seed'], 'level': lv, 'count': c}
                                     for r in records if r['dim'] is not None
                                     for lv, c in zip(r['dim']['levels'], r['dim']['counts'])]}
        extinct = sum(1 for r in records if r['extinct'])
        passed = all(r['in_bounds'] is not False for r in records)
        bounds = records[0]['bounds']
        summary = [f"fractal space={space.name} dim={_fmt(_median(dims))} "
                   f"bounds=[{bounds[0]:.4g}, {bounds[1]:.4g}] extinct={extinct}/{len(records)} "
                   f"in_bounds={passed}"]
        return ExperimentOutcome('fractal', records, series, summary, passed)

    def _schedule(self, params: Dict[str, Any], default_alpha: float) -> RadiusSchedule:
        if params.get('schedule'):
            return RadiusSchedule.parse(params['schedule'])
        return RadiusSchedule.power(float(params.get('alpha', default_alpha)))

    def _process(self, params: Dict[str, Any]) -> CenterProcess:
        return CenterProcess(params.get('centers', 'iid'), float(params.get('refresh', 0.5)))

    def run_cover(self, params: Dict[str, Any]) -> ExperimentOutcome:
        space = self._space(params)
        schedule = self._schedule(params, 2.0)
        process = self._process(params)
        n_max = int(params.get('nmax', 100_000 if params.get('quick') else 1_000_000))
        levels = params.get('levels', (6, 14))
        windows = int(params.get('windows', self.config.WINDOW_COUNT))
        tree = self._tree(space, params, levels[1])

        def task(seed: int) -> Dict[str, Any]:
            report = covering_dimension_experiment(space, process, schedule, n_max, levels, seed,
                                                   windows, self.config.DIM_TOLERANCE, tree=tree)
            return {'kind': 'cover', 'space': space.name, 'nmax': n_max, **report.to_dict()}

        records = self.run_seeds(self.seeds(params), task)
        dims = [r['dim']['slope'] for r in records]
        med = _median(dims)
        s0 = records[0]['s0']
        expected = records[0]['expected']
        passed = abs(med - expected) <= self.config.DIM_TOLERANCE
        series = {'cover_counts': [{'seed': r['seed'], 'level': lv, 'count': c} for r in records
                                   for lv, c in zip(r['dim']['levels'], r['dim']['counts'])]}
        summary = [f"cover space={space.name} s0={s0:g} expected={expected:g} dim={med:.4f} "
                   f"tolerance={self.config.DIM_TOLERANCE:g} passed={passed}"]
        return ExperimentOutcome('cover', records, series, summary, passed)

    def _rect_spec(self, params: Dict[str, Any], default_alpha: float) -> RectangleSpec:
        names = str(params.get('factors', 'torus1,torus1')).split(',')
        a = params.get('a', [1.0, 2.0])
        if len(a) != len(names):
            raise InvalidParameterError('one exponent per factor is required',
                                        factors=len(names), exponents=len(a))
        factors = tuple(parse_space(name) for name in names)
        return RectangleSpec(factors, tuple(float(x) for x in a), self._schedule(params, default_alpha))

    def run_rect(self, params: Dict[str, Any]) -> ExperimentOutcome:
        spec = self._rect_spec(params, 0.5)
        exponent = rectangle_exponent(spec)
        process = self._process(params)
        n_max = int(params.get('nmax', 20_000 if params.get('quick') else 100_000))
        levels = params.get('levels', (4, 9) if params.get('quick') else (4, 10))
        windows = int(params.get('windows', self.config.WINDOW_COUNT))

        def task(seed: int) -> Dict[str, Any]:
            report = rectangle_dimension_experiment(spec, process, n_max, levels, seed, windows,
                                                    self.config.DIM_TOLERANCE)
            return {'kind': 'rect', 'nmax': n_max, 'table': exponent.table, **report.to_dict()}

        records = self.run_seeds(self.seeds(params), task)
        med = _median([r['dim']['slope'] for r in records])
        passed = abs(med - exponent.value) <= self.config.DIM_TOLERANCE
        a_text = ','.join(f'{x:g}' for x in spec.exponents)
        summary = [f"rect factors={','.join(f.name for f in spec.factors)} a={a_text} "
                   f"exponent={exponent.value:g} argmin={exponent.argmin} dim={med:.4f} passed={passed}"]
        return ExperimentOutcome('rect', records, {}, summary, passed)

    def run_intersect(self, params: Dict[str, Any]) -> ExperimentOutcome:
        space = self._space(params)
        schedule = self._schedule(params, 2.0)
        process = self._process(params)
        n_max = int(params.get('nmax', 100_000 if params.get('quick') else 1_000_000))
        level = int(params.get('level', 12))
        lo = params.get('levels', (6, level))[0]
        count = int(params.get('maps', 3))
        windows = int(params.get('windows', self.config.WINDOW_COUNT))
        tree = self._tree(space, params, level)
        reference = min(space.s, schedule.s0())
        gens = [g for g in range(lo, level + 1)
                if schedule.radius(n_max) <= tree.b ** (g + 1)]

        def task(seed: int) -> Dict[str, Any]:
            realization = stream_limsup(tree, process, schedule, n_max, level, windows, seed,
                                        generation_levels=gens)
            if isinstance(space, TorusSpace):
                maps = random_translations(tree, count, seed)
            else:
                maps = random_permutations(tree, count, seed)
            report = intersection_lab(tree, realization.approx, maps, reference,
                                      tolerance=self.config.DIM_TOLERANCE,
                                      generations=realization.generations)
            return {'kind': 'intersect', 'seed': seed, 'space': space.name, **report.to_dict()}

        records = self.run_seeds(self.seeds(params), task)
        passed_count = sum(1 for r in records if r['passed'])
        slopes = [p['slope'] for r in records for p in r['prefixes']]
        summary = [f"intersect space={space.name} reference_t={reference:g} maps={count} "
                   f"min_dim={_fmt(min(slopes) if slopes else None)} "
                   f"passed={passed_count}/{len(records)}"]
        return ExperimentOutcome('intersect', records, {}, summary, passed_count == len(records))
