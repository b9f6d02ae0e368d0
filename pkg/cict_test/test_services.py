"""Tests for service layer components."""
import pytest

from config.settings import TestingConfig
from lab.errors import InvalidParameterError, LabError, PreconditionError
from services.base_service import BaseService, ServiceResult
from services.experiment_service import ExperimentOutcome, ExperimentService
from services.suite_service import SuiteOutcome, SuiteService


class TestServiceResult:
    """Test cases for ServiceResult dataclass."""

    def test_success_creation(self):
        """Test creating a successful result."""
        result = ServiceResult.ok(data={"key": "value"})
        assert result.success is True
        assert result.data == {"key": "value"}
        assert result.error is None
        assert result.status_code == 0

    def test_failure_creation(self):
        """Test creating a failure result defaults to exit code 1."""
        result = ServiceResult.fail(error="Something went wrong")
        assert result.success is False
        assert result.error == "Something went wrong"
        assert result.status_code == 1

    @pytest.mark.parametrize("error, code", [
        (LabError("broken"), 1),
        (InvalidParameterError("bad alpha", alpha=-1), 2),
        (PreconditionError("s0 must be positive", s0=0.0), 3),
    ])
    def test_from_error(self, error, code):
        """Test workbench errors carry their exit code and record."""
        result = ServiceResult.from_error(error)
        assert result.status_code == code
        assert result.record["message"] == error.message

    def test_to_dict_success(self):
        """Test converting successful result to dict."""
        assert ServiceResult.ok(data=[1]).to_dict() == {"success": True, "data": [1]}

    def test_to_dict_failure(self):
        """Test converting failed result to dict keeps the error record."""
        result = ServiceResult.from_error(PreconditionError("no", s0=0.0))
        payload = result.to_dict()
        assert payload["success"] is False
        assert payload["record"] == {"error": "precondition-violated", "message": "no",
                                     "context": {"s0": 0.0}}


class TestBaseService:
    """Test cases for BaseService."""

    def test_logger_named_after_class(self):
        """Test that services get a class-named logger."""
        assert BaseService().logger.name == "BaseService"

    def test_log_operation(self, caplog):
        """Test operation logging format."""
        with caplog.at_level("INFO"):
            BaseService().log_operation("cover", seed=3, alpha=2.0)
        assert "[cover] seed=3, alpha=2.0" in caplog.text

    def test_guarded_success(self):
        """Test guarded wraps return values."""
        result = BaseService().guarded("op", lambda: 42)
        assert result.success and result.data == 42

    def test_guarded_converts_lab_errors(self):
        """Test guarded turns workbench errors into failed results."""
        def boom():
            raise PreconditionError("needs coverage", measure=0.5)

        result = BaseService().guarded("rect", boom)
        assert not result.success
        assert result.status_code == 3

    def test_guarded_propagates_other_errors(self):
        """Test unexpected errors are left to the caller."""
        def boom():
            raise RuntimeError("bug")

        with pytest.raises(RuntimeError):
            BaseService().guarded("op", boom)


@pytest.fixture
def service(monkeypatch):
    monkeypatch.setenv("LIMSUP_LAB_THREADS", "4")
    return ExperimentService(TestingConfig())


class TestExperimentService:
    """Test experiment dispatch and seed handling."""

    def test_single_seed(self, service):
        """Test an explicit seed runs once."""
        assert service.seeds({"seed": 7}) == [7]

    def test_seed_list_deterministic(self, service):
        """Test derived seed lists are reproducible and distinct."""
        seeds = service.seeds({"seed": 7, "seeds": 5})
        assert seeds == service.seeds({"seed": 7, "seeds": 5})
        assert len(set(seeds)) == 5

    def test_run_seeds_sorted(self, service):
        """Test records come back in seed order from the pool."""
        records = service.run_seeds([9, 2, 5, 1], lambda seed: {"seed": seed})
        assert [r["seed"] for r in records] == [1, 2, 5, 9]

    def test_unknown_kind(self, service):
        """Test unknown experiment kinds fail with exit code 2."""
        result = service.run("teleport", {})
        assert not result.success
        assert result.status_code == 2

    def test_rect_bad_ordering(self, service):
        """Test decreasing exponents are rejected with the ordering text."""
        result = service.run("rect", {"factors": "torus1,torus1", "a": [2.0, 1.0]})
        assert result.status_code == 2
        assert "1 <= a_1 <= ... <= a_d" in result.error

    def test_rect_exponent_count_mismatch(self, service):
        """Test one exponent per factor is required."""
        result = service.run("rect", {"factors": "torus1,torus1", "a": [1.0]})
        assert result.status_code == 2

    def test_cover_needs_positive_s0(self, service):
        """Test exponential schedules violate the covering precondition."""
        result = service.run("cover", {"schedule": "exponential:1", "seed": 1, "nmax": 1000})
        assert result.status_code == 3
        assert result.record["error"] == "precondition-violated"

    def test_audit_torus(self, service):
        """Test a small audit run produces a passing record."""
        result = service.run("audit", {"space": "torus1", "trials": 500, "levels": 4, "seed": 1})
        assert result.success
        outcome = result.data
        assert isinstance(outcome, ExperimentOutcome)
        assert outcome.passed is True
        assert outcome.records[0]["space"] == "torus1"
        assert outcome.summary[0].startswith("audit space=torus1 C=2 s=1")

    def test_energy_floor_from_max_level(self, service):
        """Test an explicit max level sets the distance floor and reports redraws."""
        result = service.run("energy", {"space": "torus1", "t": 0.5, "method": "monte-carlo",
                                        "budget": 4000, "max_level": 4, "seed": 1})
        assert result.success
        record = result.data.records[0]
        assert record["floor"] == 0.0625
        assert record["resampled_rate"] > 0
        assert "resampled_rate=" in result.data.summary[0]

    def test_audit_bad_space(self, service):
        """Test unknown space names are input errors."""
        result = service.run("audit", {"space": "klein7"})
        assert result.status_code == 2


def check_alpha(base, quick):
    return {"passed": True, "base": base}


def check_beta(base, quick):
    return {"passed": quick}


def check_broken(base, quick):
    raise PreconditionError("nothing to check")


class TestSuiteService:
    """Test the acceptance suite plumbing with stand-in checks."""

    def test_unknown_suite(self):
        """Test unknown suite names fail with exit code 2."""
        result = SuiteService(TestingConfig()).run("smoke")
        assert result.status_code == 2

    def test_matrix_and_status(self, mocker):
        """Test records, matrix and exit status from the checks."""
        service = SuiteService(TestingConfig())
        mocker.patch.object(service, "checks", return_value=[check_alpha, check_beta])
        result = service.run("acceptance", quick=True, seed=11)
        outcome = result.data
        assert isinstance(outcome, SuiteOutcome)
        assert outcome.matrix == {"alpha": True, "beta": True}
        assert outcome.records[0] == {"check": "alpha", "passed": True, "base": 11}
        assert result.status_code == 0
        assert outcome.summary[0] == "suite acceptance quick=True passed=2/2"

    def test_failed_check_sets_status(self, mocker):
        """Test a failing or raising check fails the suite."""
        service = SuiteService(TestingConfig())
        mocker.patch.object(service, "checks", return_value=[check_alpha, check_beta, check_broken])
        result = service.run("acceptance", quick=False, seed=1)
        outcome = result.data
        assert result.status_code == 1
        assert outcome.matrix == {"alpha": True, "beta": False, "broken": False}
        assert outcome.records[2]["error"]["error"] == "precondition-violated"
        assert "  FAIL broken" in outcome.summary

    def test_records_hold_no_wall_time(self, mocker):
        """Test check records are free of timing fields."""
        service = SuiteService(TestingConfig())
        mocker.patch.object(service, "checks", return_value=[check_alpha])
        record = service.run("acceptance", seed=1).data.records[0]
        assert not any("time" in key or "seconds" in key for key in record)

    def test_net_content_check(self):
        """Test the net content check agrees with brute force on quick settings."""
        record = SuiteService(TestingConfig()).check_net_content(20240601, True)
        assert record["mismatches"] == 0
        assert record["identity_failures"] == 0
        assert record["passed"] is True
