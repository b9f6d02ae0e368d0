"""
Repository Layer Package

Data access components for experiment artifacts.

Architecture:
- Services call repositories for data operations
- Repositories handle all file system access
"""

from repositories.file_repository import FileRepository
from repositories.result_repository import ResultRepository, records_equal

__all__ = ['FileRepository', 'ResultRepository', 'records_equal']
