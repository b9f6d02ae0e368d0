"""
Suite Service

The acceptance battery: every check runs with pinned seeds and yields one
record; the matrix maps check names to pass/fail. Wall times go to the log,
never into records, so repeated runs write identical files.
"""

import math
import time
from dataclasses import dataclass, field
from statistics import median
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from config.settings import Config, get_config
from lab.covering import (
    CenterProcess,
    RadiusSchedule,
    covering_dichotomy,
    covering_dimension_experiment,
    stream_limsup,
)
from lab.cubes import CubeSet, audit_tree, build_tree
from lab.dimension import intersection_lab, random_translations
from lab.energy import LambdaQuery, energy, energy_bounds_check, lambda_index
from lab.errors import LabError
from lab.netcontent import li_certificate, net_content, net_content_bruteforce
from lab.randfractal import RandomFractalModel, UniformSurvival, fractal_dimension_experiment
from lab.rectangles import LAMBDA_INDICES, RectangleSpec, rectangle_lambda
from lab.spaces import Ball, CantorSpace, SymbolicSpace, TorusSpace, regularity_audit
from repositories.result_repository import records_equal
from services.base_service import BaseService, ServiceResult
from utils.rng import seed_list, stream
from utils.validators import ALLOWED_SUITES


@dataclass
class SuiteOutcome:
    name: str
    quick: bool
    records: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def matrix(self) -> Dict[str, bool]:
        return {r['check']: r['passed'] for r in self.records}

    @property
    def passed(self) -> bool:
        return all(self.matrix.values())

    @property
    def summary(self) -> List[str]:
        lines = [f"suite {self.name} quick={self.quick} passed={sum(self.matrix.values())}/{len(self.records)}"]
        lines += [f"  {'PASS' if ok else 'FAIL'} {name}" for name, ok in self.matrix.items()]
        return lines


class SuiteService(BaseService):
    """Service running named verification suites"""

    def __init__(self, config: Optional[Config] = None):
        super().__init__()
        self.config = config or get_config()

    def run(self, name: str, quick: bool = False, seed: Optional[int] = None) -> ServiceResult:
        if name not in ALLOWED_SUITES:
            return ServiceResult.fail(f'unknown suite: {name}', status_code=2)
        self.log_operation('suite', name=name, quick=quick)
        base = self.config.DEFAULT_SEED if seed is None else int(seed)
        outcome = SuiteOutcome(name, quick)
        for check in self.checks():
            outcome.records.append(self._timed(check, base, quick))
        status = 0 if outcome.passed else 1
        return ServiceResult(success=True, data=outcome, status_code=status)

    def checks(self) -> List[Callable[[int, bool], Dict[str, Any]]]:
        return [
            self.check_regularity, self.check_cube_axioms, self.check_energy_oracle,
            self.check_net_content, self.check_lambda, self.check_fractal,
            self.check_dichotomy, self.check_covering_dimension, self.check_intersection,
            self.check_certificate_trend, self.check_determinism,
        ]

    def _timed(self, check, base: int, quick: bool) -> Dict[str, Any]:
        name = check.__name__[len('check_'):]
        started = time.perf_counter()
        try:
            record = check(base, quick)
        except LabError as e:
            self.log_error(name, e)
            record = {'passed': False, 'error': e.to_record()}
        self.logger.info(f"[suite] check={name} passed={record['passed']} "
                         f"seconds={time.perf_counter() - started:.1f}")
        return {'check': name, **record}

    # ------------------------------------------------------------------

    def check_regularity(self, base: int, quick: bool) -> Dict[str, Any]:
        trials = 2_000 if quick else 10_000
        spaces = [TorusSpace(1), TorusSpace(2), SymbolicSpace(2, 0.5), CantorSpace()]
        reports = [regularity_audit(space, trials, base + 1) for space in spaces]
        return {'passed': all(r.passed for r in reports),
                'spaces': {r.space: r.worst for r in reports}, 'trials': trials}

    def check_cube_axioms(self, base: int, quick: bool) -> Dict[str, Any]:
        levels = 8 if quick else 12
        trees = [build_tree(TorusSpace(1), 0.25, max_level=levels),
                 build_tree(SymbolicSpace(2, 0.5), 0.5, max_level=levels)]
        audits = [audit_tree(tree, seed=base + 2, levels=levels) for tree in trees]
        return {'passed': all(a.passed for a in audits),
                'trees': [a.to_dict() for a in audits]}

    def check_energy_oracle(self, base: int, quick: bool) -> Dict[str, Any]:
        runs = 10 if quick else 100
        budget = 100_000 if quick else 1_000_000
        needed = runs - 1 if quick else 99
        space = TorusSpace(1)
        agreement = {}
        for t in (0.25, 0.5, 0.75):
            exact = 2.0 ** t / (1.0 - t)
            good = 0
            for seed in seed_list(base + 3, runs):
                est = energy(space, None, t, budget=budget, seed=seed, method='monte-carlo')
                good += abs(est.value - exact) <= 3.0 * est.stderr
            agreement[str(t)] = good
        instances = 20 if quick else 100
        rng = stream(base + 3, 99)
        spaces = [TorusSpace(1), TorusSpace(2), SymbolicSpace(2, 0.5)]
        bounds_ok = 0
        for k in range(instances):
            space = spaces[k % len(spaces)]
            radius = float(np.exp(rng.uniform(math.log(0.01), math.log(0.4))))
            t = float(rng.uniform(0.05, 0.9)) * space.s
            ball = Ball(space.sample(1, rng)[0], radius)
            report = energy_bounds_check(space, ball, t, budget=20_000, seed=base + k)
            bounds_ok += report.passed
        passed = all(v >= needed for v in agreement.values()) and bounds_ok == instances
        return {'passed': passed, 'agreement': agreement, 'runs': runs,
                'bounds_passed': bounds_ok, 'bounds_instances': instances}

    def check_net_content(self, base: int, quick: bool) -> Dict[str, Any]:
        instances = 50 if quick else 200
        tree = build_tree(SymbolicSpace(2, 0.5), max_level=6)
        rng = stream(base + 4)
        mismatches = 0
        for _ in range(instances):
            level = int(rng.integers(1, 4))
            count = tree.count(level)
            picks = np.flatnonzero(rng.random(count) < rng.uniform(0.2, 0.9))
            F = CubeSet(tree, level, picks)
            t = float(rng.uniform(0.05, 1.0)) * tree.space.s
            fast = net_content(tree, F, t).value
            slow = net_content_bruteforce(tree, F, t)
            mismatches += not math.isclose(fast, slow, rel_tol=1e-12, abs_tol=1e-15)
        identity_failures = 0
        for level in range(6):
            for index in range(tree.count(level)):
                cube = CubeSet(tree, level, [index])
                for t in (0.25, 0.5, 1.0):
                    value = net_content(tree, cube, t).value
                    target = tree.cube_measure(level) ** (t / tree.space.s)
                    identity_failures += not math.isclose(value, target, rel_tol=1e-12)
        return {'passed': mismatches == 0 and identity_failures == 0,
                'instances': instances, 'mismatches': mismatches,
                'identity_failures': identity_failures}

    def check_lambda(self, base: int, quick: bool) -> Dict[str, Any]:
        budget = 10_000 if quick else 50_000
        space = TorusSpace(1)
        radii = [float(r) for r in RadiusSchedule.power(1.0).radii(np.asarray(LAMBDA_INDICES))]
        found = {}
        ok = True
        for t0 in (0.25, 0.5, 0.75):
            query = LambdaQuery(space, list(LAMBDA_INDICES), radii, rule='power', t0=t0,
                                budget=budget, seed=base + 5)
            lam = lambda_index(query).lambda_hat
            found[str(t0)] = lam
            ok &= lam is not None and abs(lam - t0) <= 0.05 + 1e-9
        spec = RectangleSpec((TorusSpace(1), TorusSpace(1)), (1.0, 2.0), RadiusSchedule.power(0.5))
        lam = rectangle_lambda(spec, seed=base + 5, budget=budget).lambda_hat
        found['rectangle'] = lam
        ok &= lam is not None and abs(lam - 1.5) <= 0.05 + 1e-9
        return {'passed': bool(ok), 'lambda_hat': found}

    def check_fractal(self, base: int, quick: bool) -> Dict[str, Any]:
        count, top = (5, 12) if quick else (10, 14)
        inner, outer = ((0.35, 0.65), (0.25, 0.75)) if quick else ((0.40, 0.60), (0.30, 0.70))
        tree = build_tree(SymbolicSpace(2, 0.5), max_level=top)
        dims, extinct = [], 0
        for seed in seed_list(base + 6, count):
            model = RandomFractalModel(UniformSurvival(0.5), seed=seed)
            report = fractal_dimension_experiment(model, tree, (1, top), self.config.WINDOW_COUNT,
                                                  self.config.DIM_TOLERANCE,
                                                  self.config.CORRELATION_EPSILON)
            if report.extinct:
                extinct += 1
            else:
                dims.append(report.dim.slope)
        med = float(median(dims)) if dims else None
        passed = (med is not None and inner[0] <= med <= inner[1]
                  and all(outer[0] <= d <= outer[1] for d in dims))
        return {'passed': passed, 'median': med, 'dims': dims, 'extinct': extinct}

    def check_dichotomy(self, base: int, quick: bool) -> Dict[str, Any]:
        n_max = 100_000 if quick else 1_000_000
        level = 10 if quick else 12
        space = TorusSpace(1)
        process = CenterProcess()
        null = covering_dichotomy(space, process, RadiusSchedule.power(2.0), n_max, level, base + 7)
        full = covering_dichotomy(space, process, RadiusSchedule.power(1.0), n_max, level, base + 7)
        return {'passed': null.passed and full.passed and null.branch == 'null' and full.branch == 'full',
                'null': null.to_dict(), 'full': full.to_dict()}

    def check_covering_dimension(self, base: int, quick: bool) -> Dict[str, Any]:
        count = 4 if quick else 10
        n_max = 100_000 if quick else 1_000_000
        space = TorusSpace(1)
        tree = build_tree(space, max_level=14)
        medians = {}
        for kind in ('iid', 'markov'):
            dims = [covering_dimension_experiment(space, CenterProcess(kind), RadiusSchedule.power(2.0),
                                                  n_max, (6, 14), seed, tree=tree).dim.slope
                    for seed in seed_list(base + 8, count)]
            medians[kind] = float(median(dims))
        return {'passed': all(0.40 <= m <= 0.60 for m in medians.values()), 'medians': medians}

    def check_intersection(self, base: int, quick: bool) -> Dict[str, Any]:
        count, needed = (4, 3) if quick else (10, 8)
        n_max = 100_000 if quick else 1_000_000
        level = 10 if quick else 12
        space = TorusSpace(1)
        schedule = RadiusSchedule.power(2.0)
        tree = build_tree(space, max_level=level)
        good = 0
        for seed in seed_list(base + 9, count):
            realization = stream_limsup(tree, CenterProcess(), schedule, n_max, level,
                                        self.config.WINDOW_COUNT, seed,
                                        generation_levels=range(6, level + 1))
            report = intersection_lab(tree, realization.approx, random_translations(tree, 3, seed),
                                      schedule.s0(), tolerance=self.config.DIM_TOLERANCE,
                                      generations=realization.generations)
            good += report.passed
        return {'passed': good >= needed, 'passing_seeds': good, 'seeds': count}

    def check_certificate_trend(self, base: int, quick: bool) -> Dict[str, Any]:
        n_max = 100_000 if quick else 1_000_000
        space = TorusSpace(1)
        schedule = RadiusSchedule.power(2.0)
        tree = build_tree(space, max_level=12)
        values = {}
        for level in (8, 12):
            realization = stream_limsup(tree, CenterProcess(), schedule, n_max, level,
                                        self.config.WINDOW_COUNT, base + 10)
            values[str(level)] = li_certificate(tree, realization.approx, 0.4, 6).min_c
        return {'passed': values['12'] >= 0.5 * values['8'], 'min_c': values}

    def check_determinism(self, base: int, quick: bool) -> Dict[str, Any]:
        def once() -> List[Dict[str, Any]]:
            audit = regularity_audit(TorusSpace(1), 1_000, base + 11).to_dict()
            cover = covering_dimension_experiment(TorusSpace(1), CenterProcess('markov'),
                                                  RadiusSchedule.power(2.0), 20_000, (6, 12),
                                                  base + 11).to_dict()
            return [audit, cover]

        return {'passed': records_equal(once(), once())}
