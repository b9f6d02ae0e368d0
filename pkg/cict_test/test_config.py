"""Unit tests for config module."""
import pytest
from config.settings import (
    Config, DevelopmentConfig, ProductionConfig, TestingConfig, get_config,
)


class TestConfig:
    """Test base configuration class."""

    def test_default_values(self, monkeypatch):
        """Test that default values are set correctly."""
        monkeypatch.delenv('LIMSUP_LAB_SEED', raising=False)
        monkeypatch.delenv('LIMSUP_LAB_MAX_LEVEL', raising=False)
        config = Config()
        assert config.DEFAULT_SEED == 20240601
        assert config.MAX_LEVEL == 14
        assert config.SYMBOLIC_DEPTH == 64
        assert config.CANTOR_DEPTH == 34
        assert config.WINDOW_COUNT == 4
        assert config.DIM_TOLERANCE == 0.15
        assert config.SLOPE_EPSILON == 0.05

    def test_environment_override(self, monkeypatch):
        """Test that environment variables override defaults."""
        monkeypatch.setenv('LIMSUP_LAB_THREADS', '3')
        monkeypatch.setenv('LIMSUP_LAB_SEED', '7')
        monkeypatch.setenv('LIMSUP_LAB_ENERGY_BUDGET', '1234')
        config = Config()
        assert config.THREADS == 3
        assert config.DEFAULT_SEED == 7
        assert config.ENERGY_BUDGET == 1234

    def test_threads_never_below_one(self, monkeypatch):
        """Test that a zero thread cap is raised to one."""
        monkeypatch.setenv('LIMSUP_LAB_THREADS', '0')
        assert Config().THREADS == 1

    def test_threads_default_from_psutil(self, monkeypatch, mocker):
        """Test the default thread count comes from the physical core count."""
        monkeypatch.delenv('LIMSUP_LAB_THREADS', raising=False)
        mocker.patch('config.settings.psutil.cpu_count', return_value=6)
        assert Config().THREADS == 6

    def test_path_configuration(self, monkeypatch, tmp_path):
        """Test path configuration."""
        monkeypatch.setenv('BASE_DIR', str(tmp_path))
        monkeypatch.delenv('LIMSUP_LAB_RESULTS_DIR', raising=False)
        monkeypatch.delenv('LOGS_DIR', raising=False)
        config = Config()
        assert config.RESULTS_DIR == str(tmp_path / 'results')
        assert config.LOGS_DIR == str(tmp_path / 'logs')


class TestEnvironmentConfigs:
    """Test environment-specific configuration classes."""

    def test_development_logs_debug(self, monkeypatch):
        """Test that development logs at DEBUG."""
        monkeypatch.delenv('LOG_LEVEL', raising=False)
        assert DevelopmentConfig().LOG_LEVEL == 'DEBUG'

    def test_production_logs_info(self, monkeypatch):
        """Test that production logs at INFO."""
        monkeypatch.delenv('LOG_LEVEL', raising=False)
        assert ProductionConfig().LOG_LEVEL == 'INFO'

    def test_testing_uses_small_budgets(self, monkeypatch):
        """Test that the testing config shrinks Monte Carlo budgets."""
        monkeypatch.delenv('LIMSUP_LAB_ENERGY_BUDGET', raising=False)
        assert TestingConfig().ENERGY_BUDGET == 20_000


class TestGetConfig:
    """Test configuration factory function."""

    def test_default_environment(self, monkeypatch):
        """Test default to development environment."""
        monkeypatch.delenv('LIMSUP_LAB_ENV', raising=False)
        assert isinstance(get_config(), DevelopmentConfig)

    def test_environment_from_variable(self, monkeypatch):
        """Test environment selection from LIMSUP_LAB_ENV."""
        monkeypatch.setenv('LIMSUP_LAB_ENV', 'production')
        assert isinstance(get_config(), ProductionConfig)

    @pytest.mark.parametrize('env, cls', [
        ('development', DevelopmentConfig),
        ('production', ProductionConfig),
        ('testing', TestingConfig),
    ])
    def test_explicit_environment(self, env, cls):
        """Test explicit environment names."""
        assert isinstance(get_config(env), cls)

    def test_unknown_environment_falls_back(self):
        """Test that unknown environments use the base config."""
        config = get_config('staging')
        assert type(config) is Config
