"""Unit tests for logging configuration."""
import logging

from config.logging_config import setup_logging, get_logger


class TestSetupLogging:
    """Test logging setup functionality."""

    def test_returns_root_logger(self, tmp_path):
        """Test logging setup returns the configured root logger."""
        logger = setup_logging(log_dir=str(tmp_path))
        assert logger is logging.getLogger()

    def test_log_level_from_env(self, monkeypatch, tmp_path):
        """Test log level from environment variable."""
        monkeypatch.setenv('LOG_LEVEL', 'WARNING')
        logger = setup_logging(log_dir=str(tmp_path))
        assert logger.level == logging.WARNING

    def test_log_level_custom(self, tmp_path):
        """Test custom log level given by name."""
        logger = setup_logging(log_level='error', log_dir=str(tmp_path))
        assert logger.level == logging.ERROR

    def test_log_file_created(self, tmp_path):
        """Test that the rotating log file is created in the log directory."""
        log_dir = tmp_path / 'nested' / 'logs'
        setup_logging(log_dir=str(log_dir))
        logging.getLogger('lab.test').warning('hello')
        assert (log_dir / 'limsup_lab.log').exists()

    def test_handlers_configured(self, tmp_path):
        """Test that file and console handlers are installed once."""
        setup_logging(log_dir=str(tmp_path))
        setup_logging(log_dir=str(tmp_path))
        handler_types = [type(h).__name__ for h in logging.getLogger().handlers]
        assert handler_types.count('RotatingFileHandler') == 1
        assert 'StreamHandler' in handler_types


class TestGetLogger:
    """Test logger retrieval."""

    def test_get_logger_by_name(self):
        """Test getting logger by name."""
        logger = get_logger('lab.covering')
        assert logger.name == 'lab.covering'
