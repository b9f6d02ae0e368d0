"""
Command line surface.

Every subcommand accepts the global flags and ``--config FILE``; flag values
override the file. Results go to ``--out`` (default RESULTS_DIR) as JSON
lines plus CSV plot series, and a summary is printed on stdout.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

from config.settings import Config, get_config
from config.logging_config import get_logger
from repositories.result_repository import ResultRepository
from services.experiment_service import ExperimentService
from services.suite_service import SuiteService
from utils.validators import parse_config_text, validate_experiment_config
from cli.error_handlers import EXIT_INPUT, handle_error, report_failure
from lab.errors import ConfigError

logger = get_logger(__name__)

PROG = 'limsup-lab'


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--seed', type=int, default=None, help='master seed')
    parent.add_argument('--seeds', type=int, default=None, help='number of seeded runs')
    parent.add_argument('--out', default=None, help='output directory')
    parent.add_argument('--quick', action='store_true', default=None, help='reduced budgets')
    parent.add_argument('--space', default=None, help='torus1, torus2, symbolic2, cantor3, torus1,torus1 ...')
    parent.add_argument('--b', type=float, default=None, help='cube ratio')
    parent.add_argument('--max-level', dest='max_level', type=int, default=None)
    parent.add_argument('--config', default=None, help='key = value experiment file')
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(prog=PROG, description='Limsup set and large-intersection workbench')
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('audit', parents=[parent], help='regularity and cube-tree audit')
    p.add_argument('--trials', type=int, default=None)
    p.add_argument('--levels', type=int, default=None)

    p = sub.add_parser('energy', parents=[parent], help='t-energy of the space or a ball')
    p.add_argument('--t', type=float, default=None)
    p.add_argument('--radius', type=float, default=None)
    p.add_argument('--budget', type=int, default=None)
    p.add_argument('--method', default=None)
    p.add_argument('--sampler', default=None)
    p.add_argument('--shards', type=int, default=None)

    p = sub.add_parser('lambda', parents=[parent], help='empirical large-intersection index')
    p.add_argument('--rule', default=None)
    p.add_argument('--t0', type=float, default=None)
    p.add_argument('--shrink', type=float, default=None)
    p.add_argument('--a', default=None, help='rectangle exponents, e.g. 1,2')
    p.add_argument('--factors', default=None)
    p.add_argument('--alpha', type=float, default=None)
    p.add_argument('--grid-step', dest='grid_step', type=float, default=None)
    p.add_argument('--epsilon', type=float, default=None)
    p.add_argument('--budget', type=int, default=None)

    p = sub.add_parser('netcontent', parents=[parent], help='net content and certificate')
    p.add_argument('--t', type=float, default=None)
    p.add_argument('--depth', type=int, default=None)
    p.add_argument('--level', type=int, default=None)
    p.add_argument('--input', default=None, help='cube set file')
    p.add_argument('--gamma', type=float, default=None)

    p = sub.add_parser('fractal', parents=[parent], help='limsup random fractal dimension')
    p.add_argument('--gamma', type=float, default=None)
    p.add_argument('--gamma-hi', dest='gamma_hi', type=float, default=None)
    p.add_argument('--delta', type=float, default=None)
    p.add_argument('--levels', default=None, help='lo:hi')
    p.add_argument('--epsilon', type=float, default=None)
    p.add_argument('--windows', type=int, default=None)

    p = sub.add_parser('cover', parents=[parent], help='random covering set dimension')
    p.add_argument('--alpha', type=float, default=None)
    p.add_argument('--schedule', default=None, help='power:2, exponential:1, logPower:1:2')
    p.add_argument('--centers', default=None, help='iid or markov')
    p.add_argument('--refresh', type=float, default=None)
    p.add_argument('--nmax', type=int, default=None)
    p.add_argument('--levels', default=None, help='lo:hi')
    p.add_argument('--windows', type=int, default=None)

    p = sub.add_parser('rect', parents=[parent], help='limsup of rectangles')
    p.add_argument('--factors', default=None)
    p.add_argument('--a', default=None, help='exponents 1 <= a_1 <= ... <= a_d')
    p.add_argument('--alpha', type=float, default=None)
    p.add_argument('--centers', default=None)
    p.add_argument('--nmax', type=int, default=None)
    p.add_argument('--levels', default=None, help='lo:hi')
    p.add_argument('--windows', type=int, default=None)

    p = sub.add_parser('intersect', parents=[parent], help='intersection laboratory')
    p.add_argument('--alpha', type=float, default=None)
    p.add_argument('--nmax', type=int, default=None)
    p.add_argument('--level', type=int, default=None)
    p.add_argument('--maps', type=int, default=None)
    p.add_argument('--levels', default=None, help='lo:hi')

    p = sub.add_parser('suite', parents=[parent], help='verification suites')
    p.add_argument('name', help='suite name (acceptance)')
    return parser


def collect_params(args: argparse.Namespace) -> Dict[str, Any]:
    """Config file values overridden by explicit flags, validated for the subcommand."""
    values: Dict[str, Any] = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f'config file not found: {args.config}', {'config': 'file not found'})
        values.update(parse_config_text(path.read_text(encoding='utf-8')))
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ('command', 'config')}
    values.update(flags)
    return validate_experiment_config(args.command, values)


def _print(lines: List[str], stream: TextIO) -> None:
    for line in lines:
        stream.write(line + '\n')


def run_command(argv: Optional[List[str]] = None, config: Optional[Config] = None,
                stdout: Optional[TextIO] = None) -> int:
    """Parse ``argv``, run the experiment and return the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else 0
    if not args.command:
        parser.print_help(stdout)
        return EXIT_INPUT

    config = config or get_config()
    try:
        params = collect_params(args)
        repository = ResultRepository(params.get('out', config.RESULTS_DIR))
        if args.command == 'suite':
            return _run_suite(params, config, repository, stdout)
        result = ExperimentService(config).run(args.command, params)
        if not result.success:
            return report_failure(result)
        outcome = result.data
        repository.write_jsonl(f'{outcome.kind}.jsonl', outcome.records)
        for name, rows in outcome.series.items():
            if rows:
                repository.write_csv(f'{name}.csv', rows)
        _print(outcome.summary, stdout)
        return 0
    except (Exception, KeyboardInterrupt) as e:
        return handle_error(e)


def _run_suite(params: Dict[str, Any], config: Config, repository: ResultRepository,
               stdout: TextIO) -> int:
    result = SuiteService(config).run(params['name'], bool(params.get('quick', False)), params.get('seed'))
    if not result.success:
        return report_failure(result)
    outcome = result.data
    repository.write_jsonl('acceptance.jsonl', outcome.records)
    repository.write_json('acceptance_matrix.json', {'suite': outcome.name, 'quick': outcome.quick,
                                                     'matrix': outcome.matrix, 'passed': outcome.passed})
    _print(outcome.summary, stdout)
    return result.status_code
