"""Error types for the workbench.

Every error carries the process exit code the CLI reports for it and a
JSON-ready record. Negative outcomes that are results in their own right
(audit failures, ambiguous indices, extinction) are reports, not errors.
"""
from typing import Any, Dict, List, Optional


class LabError(Exception):
    """Base class for workbench errors."""

    exit_code: int = 1
    kind: str = 'error'

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_record(self) -> Dict[str, Any]:
        record = {'error': self.kind, 'message': self.message}
        if self.context:
            record['context'] = {k: _plain(v) for k, v in self.context.items()}
        return record


# Exit code 2: bad input


class InvalidInputError(LabError):
    exit_code = 2
    kind = 'invalid-input'


class ConfigError(InvalidInputError):
    """Schema violation; `fields` maps each offending key to a diagnostic."""

    kind = 'schema-violation'

    def __init__(self, message: str, fields: Optional[Dict[str, str]] = None):
        super().__init__(message, fields=fields or {})
        self.fields = fields or {}


class InvalidParameterError(InvalidInputError):
    kind = 'invalid-parameter'


class DivergentEnergyError(InvalidParameterError):
    kind = 'divergent-energy'


class ResolutionExceededError(InvalidInputError):
    kind = 'resolution-exceeded'


class BruteForceRefusedError(InvalidInputError):
    kind = 'brute-force-refused'


class UnsupportedModelError(InvalidInputError):
    kind = 'unsupported'


class InvalidMapError(InvalidInputError):
    kind = 'invalid-map'


# Exit code 3: experiment preconditions


class PreconditionError(LabError):
    exit_code = 3
    kind = 'precondition-violated'


class InsufficientResolutionError(PreconditionError):
    kind = 'insufficient-resolution'


class UndefinedDimensionError(PreconditionError):
    kind = 'undefined-dimension'


class InconclusiveScheduleError(PreconditionError):
    kind = 'inconclusive'


# Exit code 1: broken invariants


class EstimatorError(LabError):
    exit_code = 1
    kind = 'estimator-failure'


def _plain(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


__all__: List[str] = [
    'LabError', 'InvalidInputError', 'ConfigError', 'InvalidParameterError',
    'DivergentEnergyError', 'ResolutionExceededError', 'BruteForceRefusedError',
    'UnsupportedModelError', 'InvalidMapError', 'PreconditionError',
    'InsufficientResolutionError', 'UndefinedDimensionError',
    'InconclusiveScheduleError', 'EstimatorError',
]
