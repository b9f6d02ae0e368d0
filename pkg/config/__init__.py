"""Configuration package for limsup-lab."""
from .settings import Config, get_config
from .logging_config import setup_logging, get_logger

__all__ = ['Config', 'get_config', 'setup_logging', 'get_logger']
