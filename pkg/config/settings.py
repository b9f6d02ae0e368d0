"""Configuration management for limsup-lab.

Environment-based configuration supporting development/production/testing.
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import psutil


def _default_threads() -> int:
    """Physical core count, falling back to logical cores, never below 1."""
    count = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or 1
    return max(1, int(count))


@dataclass
class Config:
    """Base configuration class with environment variable support."""

    # Path Configuration
    BASE_DIR: Path = Path(os.getcwd())
    RESULTS_DIR: str = os.path.join(os.getcwd(), 'results')
    LOGS_DIR: str = os.path.join(os.getcwd(), 'logs')

    # Logging
    LOG_LEVEL: str = 'INFO'

    # Parallelism
    THREADS: int = 1

    # Reproducibility
    DEFAULT_SEED: int = 20240601

    # Working precision
    SYMBOLIC_DEPTH: int = 64
    CANTOR_DEPTH: int = 34
    MAX_LEVEL: int = 14

    # Estimators
    ENERGY_BUDGET: int = 200_000
    ENERGY_SHARDS: int = 4
    SLOPE_EPSILON: float = 0.05
    WINDOW_COUNT: int = 4
    CORRELATION_EPSILON: float = 0.01
    DIM_TOLERANCE: float = 0.15

    def __post_init__(self):
        """Load environment overrides at instance creation time."""
        base_dir = Path(os.getenv('BASE_DIR', os.getcwd()))
        self.BASE_DIR = base_dir
        self.RESULTS_DIR = os.getenv('LIMSUP_LAB_RESULTS_DIR', str(base_dir / 'results'))
        self.LOGS_DIR = os.getenv('LOGS_DIR', str(base_dir / 'logs'))

        self.LOG_LEVEL = os.getenv('LOG_LEVEL', self.LOG_LEVEL).upper()

        threads = os.getenv('LIMSUP_LAB_THREADS')
        self.THREADS = max(1, int(threads)) if threads else _default_threads()

        self.DEFAULT_SEED = int(os.getenv('LIMSUP_LAB_SEED', str(self.DEFAULT_SEED)))
        self.MAX_LEVEL = int(os.getenv('LIMSUP_LAB_MAX_LEVEL', str(self.MAX_LEVEL)))
        self.ENERGY_BUDGET = int(os.getenv('LIMSUP_LAB_ENERGY_BUDGET', str(self.ENERGY_BUDGET)))
        self.ENERGY_SHARDS = int(os.getenv('LIMSUP_LAB_ENERGY_SHARDS', str(self.ENERGY_SHARDS)))


@dataclass
class DevelopmentConfig(Config):
    """Development environment configuration."""
    LOG_LEVEL: str = 'DEBUG'


@dataclass
class ProductionConfig(Config):
    """Production (batch) environment configuration."""
    LOG_LEVEL: str = 'INFO'


@dataclass
class TestingConfig(Config):
    """Testing environment configuration."""
    LOG_LEVEL: str = 'DEBUG'
    ENERGY_BUDGET: int = 20_000  # Smaller Monte Carlo budgets for tests


# Environment configuration mapping
_config_map = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
}


def get_config(env: Optional[str] = None) -> Config:
    """Get configuration for the specified environment.

    Args:
        env: Environment name (development, production, testing)
             If None, reads from LIMSUP_LAB_ENV environment variable

    Returns:
        Config: Configuration instance
    """
    if env is None:
        env = os.getenv('LIMSUP_LAB_ENV', 'development').lower()

    config_class = _config_map.get(env, Config)
    return config_class()
