"""Utilities package for limsup-lab."""
from .validators import (
    parse_config_text,
    validate_experiment_config,
    sanitize_path,
)

__all__ = [
    'parse_config_text',
    'validate_experiment_config',
    'sanitize_path',
]
