"""
Base Service Class

Provides common functionality and utilities for all service classes.
"""

from typing import Optional, Dict, Any, Callable
from dataclasses import dataclass
from config.logging_config import get_logger
from lab.errors import LabError


@dataclass
class ServiceResult:
    """Unified result wrapper for service operations.

    ``status_code`` is the process exit code the CLI reports.
    """

    success: bool
    data: Optional[Any] = None
    error: Optional[str] = None
    status_code: int = 0
    record: Optional[Dict[str, Any]] = None

    @classmethod
    def ok(cls, data: Any = None, status_code: int = 0) -> 'ServiceResult':
        """Create a successful result"""
        return cls(success=True, data=data, status_code=status_code)

    @classmethod
    def fail(cls, error: str, status_code: int = 1,
             record: Optional[Dict[str, Any]] = None) -> 'ServiceResult':
        """Create a failed result"""
        return cls(success=False, error=error, status_code=status_code, record=record)

    @classmethod
    def from_error(cls, error: LabError) -> 'ServiceResult':
        """Failed result carrying the error's exit code and record."""
        return cls.fail(error.message, status_code=error.exit_code, record=error.to_record())

    def to_dict(self) -> Dict[str, Any]:
        """Convert result to a JSON-ready dictionary"""
        if self.success:
            return {
                'success': True,
                'data': self.data
            }
        return {
            'success': False,
            'error': self.error,
            'record': self.record
        }


class BaseService:
    """
    Base class for all service classes.

    Provides:
    - Logging capabilities
    - Common error handling patterns
    - Result wrapper utilities
    """

    def __init__(self):
        """Initialize service with logger"""
        self.logger = get_logger(self.__class__.__name__)

    def log_operation(self, operation: str, **kwargs):
        """Log a service operation with context"""
        context = ', '.join(f'{k}={v}' for k, v in kwargs.items())
        self.logger.info(f"[{operation}] {context}")

    def log_error(self, operation: str, error: Exception, **kwargs):
        """Log a service error with context"""
        context = ', '.join(f'{k}={v}' for k, v in kwargs.items())
        self.logger.error(f"[{operation}] Error: {str(error)} | Context: {context}")

    def guarded(self, operation: str, func: Callable[[], Any], **kwargs) -> ServiceResult:
        """Run ``func`` and wrap its value; workbench errors become failed results."""
        self.log_operation(operation, **kwargs)
        try:
            return ServiceResult.ok(func())
        except LabError as e:
            self.log_error(operation, e, **kwargs)
            return ServiceResult.from_error(e)
