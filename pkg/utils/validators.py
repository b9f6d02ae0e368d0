"""Input validation utilities for limsup-lab.

Provides:
- Experiment config schema validation (unknown keys rejected)
- Flat ``key = value`` config file parsing
- Path and filename sanitization for result files
"""
import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple
import logging

from lab.errors import ConfigError

logger = logging.getLogger(__name__)

# Allowed experiment kinds (whitelist)
ALLOWED_EXPERIMENTS = {
    'audit',
    'energy',
    'lambda',
    'netcontent',
    'fractal',
    'cover',
    'rect',
    'intersect',
    'suite',
}

ALLOWED_SUITES = {'acceptance'}
ALLOWED_METHODS = {'auto', 'exact', 'quadrature', 'monte-carlo'}
ALLOWED_SAMPLERS = {'shell', 'pairs'}
ALLOWED_RULES = {'power', 'shrink', 'rectangle'}
ALLOWED_CENTERS = {'iid', 'markov'}


def parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('expected a boolean')


def parse_float_list(value: Any) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(',') if v.strip()]


def parse_range(value: Any) -> Tuple[int, int]:
    """``lo:hi`` into an inclusive integer range."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = int(value[0]), int(value[1])
    else:
        parts = str(value).split(':')
        if len(parts) != 2:
            raise ValueError('expected lo:hi')
        lo, hi = int(parts[0]), int(parts[1])
    if lo < 0 or hi < lo:
        raise ValueError('expected 0 <= lo <= hi')
    return lo, hi


def choice(allowed) -> Callable[[Any], str]:
    def parse(value: Any) -> str:
        text = str(value).strip()
        if text not in allowed:
            raise ValueError(f'expected one of {sorted(allowed)}')
        return text
    return parse


def _positive(kind: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def parse(value: Any) -> Any:
        parsed = kind(value)
        if parsed <= 0:
            raise ValueError('expected a positive number')
        return parsed
    return parse


COMMON_KEYS: Dict[str, Callable[[Any], Any]] = {
    'space': str,
    'd': _positive(int),
    'm': _positive(int),
    'b': _positive(float),
    'factors': str,
    'max_level': _positive(int),
    'seed': int,
    'seeds': _positive(int),
    'out': str,
    'quick': parse_bool,
    'config': str,
}

EXPERIMENT_KEYS: Dict[str, Dict[str, Callable[[Any], Any]]] = {
    'audit': {'trials': _positive(int), 'levels': _positive(int)},
    'energy': {
        't': float, 'radius': float, 'budget': _positive(int),
        'method': choice(ALLOWED_METHODS), 'sampler': choice(ALLOWED_SAMPLERS),
        'shards': _positive(int),
    },
    'lambda': {
        'rule': choice(ALLOWED_RULES), 't0': float, 'shrink': float, 'a': parse_float_list,
        'factors': str, 'alpha': _positive(float), 'grid_step': _positive(float),
        'epsilon': float, 'budget': _positive(int),
    },
    'netcontent': {
        't': float, 'depth': int, 'level': _positive(int), 'input': str, 'gamma': float,
    },
    'fractal': {
        'gamma': float, 'gamma_hi': float, 'delta': float, 'levels': parse_range,
        'epsilon': _positive(float), 'windows': _positive(int),
    },
    'cover': {
        'alpha': _positive(float), 'schedule': str, 'centers': choice(ALLOWED_CENTERS),
        'refresh': float, 'nmax': _positive(int), 'levels': parse_range,
        'windows': _positive(int),
    },
    'rect': {
        'factors': str, 'a': parse_float_list, 'alpha': _positive(float),
        'centers': choice(ALLOWED_CENTERS), 'nmax': _positive(int), 'levels': parse_range,
        'windows': _positive(int),
    },
    'intersect': {
        'alpha': _positive(float), 'nmax': _positive(int), 'level': _positive(int),
        'maps': _positive(int), 'levels': parse_range,
    },
    'suite': {'name': choice(ALLOWED_SUITES)},
}


def schema_for(kind: str) -> Dict[str, Callable[[Any], Any]]:
    if kind not in ALLOWED_EXPERIMENTS:
        raise ConfigError(f'unknown experiment kind: {kind}', {'kind': 'unknown experiment kind'})
    return {**COMMON_KEYS, **EXPERIMENT_KEYS[kind]}


def validate_experiment_config(kind: str, values: Dict[str, Any]) -> Dict[str, Any]:
    """Type-check ``values`` against the schema of ``kind``.

    Args:
        kind: Experiment kind
        values: Raw values (strings from a config file, or typed CLI values)

    Returns:
        dict: Typed values with None entries dropped

    Raises:
        ConfigError: listing every unknown or malformed key
    """
    schema = schema_for(kind)
    typed: Dict[str, Any] = {}
    problems: Dict[str, str] = {}
    for raw_key, value in values.items():
        key = raw_key.replace('-', '_')
        if value is None:
            continue
        parse = schema.get(key)
        if parse is None:
            problems[key] = 'unknown key'
            continue
        try:
            typed[key] = parse(value)
        except (TypeError, ValueError) as e:
            problems[key] = str(e) or 'malformed value'
    if problems:
        logger.warning(f'Config rejected for {kind}: {problems}')
        raise ConfigError(f'invalid {kind} config: ' + ', '.join(sorted(problems)), problems)
    return typed


_LINE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*=\s*(.*?)\s*$')


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment outside quotes."""
    values: Dict[str, str] = {}
    problems: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        match = _LINE.match(stripped)
        if not match:
            problems[f'line {number}'] = 'expected key = value'
            continue
        key, value = match.group(1), match.group(2)
        if value[:1] in ('"', "'"):
            end = value.find(value[0], 1)
            if end < 0:
                problems[f'line {number}'] = 'unterminated string'
                continue
            value = value[1:end]
        else:
            value = value.split('#', 1)[0].strip()
        values[key.replace('-', '_')] = value
    if problems:
        raise ConfigError('malformed config file', problems)
    return values


def sanitize_path(path: str, base_dir: Optional[str] = None) -> Optional[str]:
    """Sanitize file path to prevent path traversal.

    Args:
        path: User-provided path
        base_dir: Base directory to constrain paths within

    Returns:
        str: Sanitized absolute path, or None if invalid
    """
    if not path:
        return None

    try:
        path = path.replace('\x00', '')
        abs_path = Path(path).resolve()

        if base_dir:
            base = Path(base_dir).resolve()
            try:
                abs_path.relative_to(base)
            except ValueError:
                logger.warning(f'Path traversal attempt detected: {path} outside {base_dir}')
                return None

        return str(abs_path)

    except Exception as e:
        logger.error(f'Error sanitizing path "{path}": {e}')
        return None
