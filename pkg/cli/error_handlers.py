"""
Centralized Error Handlers for the command line
Maps failures to exit codes and prints one JSON error record on stderr
"""

import json
import sys
import traceback
from typing import Any, Dict, TextIO

from config.logging_config import get_logger
from lab.errors import LabError
from services.base_service import ServiceResult

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_INTERRUPTED = 130


def _emit(record: Dict[str, Any], stream: TextIO) -> None:
    stream.write(json.dumps(record, sort_keys=True) + '\n')


def handle_error(error: BaseException, stream: TextIO = None) -> int:
    """Report an exception raised outside a service and return its exit code."""
    stream = stream or sys.stderr
    if isinstance(error, LabError):
        logger.warning(f"{error.kind}: {error.message}")
        _emit(error.to_record(), stream)
        return error.exit_code
    if isinstance(error, KeyboardInterrupt):
        logger.warning("Interrupted")
        return EXIT_INTERRUPTED
    logger.error(f"Unhandled error: {error}\n{traceback.format_exc()}")
    _emit({'error': 'internal', 'message': str(error)}, stream)
    return EXIT_FAILURE


def report_failure(result: ServiceResult, stream: TextIO = None) -> int:
    """Print a failed service result and return its exit code."""
    stream = stream or sys.stderr
    _emit(result.record or {'error': 'failed', 'message': result.error}, stream)
    return result.status_code or EXIT_FAILURE
