"""Command line package for limsup-lab."""
from cli.commands import build_parser, run_command

__all__ = ['build_parser', 'run_command']
