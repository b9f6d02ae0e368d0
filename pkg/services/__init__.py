"""
Service Layer Package

Services hold the experiment logic the command line drives; they call into
``lab`` for the mathematics and return ``ServiceResult`` wrappers.

Architecture:
- CLI (thin commands) -> Services (experiments) -> Repositories (result files)
"""

from services.base_service import BaseService, ServiceResult
from services.experiment_service import ExperimentOutcome, ExperimentService
from services.suite_service import SuiteOutcome, SuiteService

__all__ = ['BaseService', 'ServiceResult', 'ExperimentOutcome', 'ExperimentService',
           'SuiteOutcome', 'SuiteService']
