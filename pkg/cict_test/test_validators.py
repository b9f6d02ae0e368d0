"""Unit tests for utils.validators module."""
import os
import tempfile

import pytest

from lab.errors import ConfigError
from utils.validators import (
    parse_config_text,
    parse_range,
    sanitize_path,
    schema_for,
    validate_experiment_config,
)


class TestSanitizePath:
    """Test path sanitization functionality."""

    def test_sanitize_relative_path(self):
        """Test conversion of relative to absolute path."""
        result = sanitize_path("results/cover.jsonl")
        assert result is not None
        assert os.path.isabs(result)

    def test_path_traversal_attack(self):
        """Test prevention of path traversal attack."""
        with tempfile.TemporaryDirectory() as tmpdir:
            result = sanitize_path("../../etc/passwd", base_dir=tmpdir)
            assert result is None

    def test_path_within_base(self):
        """Test path within base directory is allowed."""
        with tempfile.TemporaryDirectory() as tmpdir:
            result = sanitize_path(os.path.join(tmpdir, "cover.jsonl"), base_dir=tmpdir)
            assert result is not None
            assert result.startswith(os.path.realpath(tmpdir))

    def test_empty_path(self):
        """Test empty path is rejected."""
        assert sanitize_path("") is None


class TestExperimentSchema:
    """Test per-experiment config schemas."""

    def test_common_keys_present(self):
        """Test every schema accepts the global keys."""
        for kind in ("audit", "cover", "rect", "suite"):
            schema = schema_for(kind)
            assert {"space", "seed", "seeds", "out", "quick"} <= set(schema)

    def test_unknown_kind(self):
        """Test unknown experiment kinds are schema violations."""
        with pytest.raises(ConfigError) as exc:
            schema_for("teleport")
        assert exc.value.exit_code == 2

    def test_typed_values(self):
        """Test string values from config files are typed."""
        values = validate_experiment_config("cover", {
            "alpha": "0.5", "nmax": "1000", "levels": "6:12", "centers": "markov",
            "quick": "true", "seed": "3",
        })
        assert values == {"alpha": 0.5, "nmax": 1000, "levels": (6, 12),
                          "centers": "markov", "quick": True, "seed": 3}

    def test_structured_space_keys(self):
        """Test space parameters may be given key by key."""
        values = validate_experiment_config("audit", {"space": "symbolic", "m": "3", "b": "0.2"})
        assert values == {"space": "symbolic", "m": 3, "b": 0.2}
        values = validate_experiment_config("energy", {"space": "product", "factors": "torus1,cantor"})
        assert values["factors"] == "torus1,cantor"

    def test_dashes_normalized(self):
        """Test CLI-style dashed keys map to schema keys."""
        values = validate_experiment_config("lambda", {"grid-step": "0.1", "max-level": 8})
        assert values == {"grid_step": 0.1, "max_level": 8}

    def test_none_values_skipped(self):
        """Test unset CLI flags are dropped."""
        assert validate_experiment_config("energy", {"t": None, "radius": 0.1}) == {"radius": 0.1}

    def test_unknown_key_reported(self):
        """Test unknown keys raise with a per-field diagnostic."""
        with pytest.raises(ConfigError) as exc:
            validate_experiment_config("cover", {"alpha": 1, "colour": "red"})
        assert exc.value.fields == {"colour": "unknown key"}
        assert exc.value.to_record()["error"] == "schema-violation"

    def test_malformed_values_reported(self):
        """Test every malformed key is listed at once."""
        with pytest.raises(ConfigError) as exc:
            validate_experiment_config("cover", {"alpha": "-1", "centers": "poisson", "nmax": "x"})
        assert set(exc.value.fields) == {"alpha", "centers", "nmax"}

    def test_suite_name_whitelist(self):
        """Test only known suites are accepted."""
        assert validate_experiment_config("suite", {"name": "acceptance"}) == {"name": "acceptance"}
        with pytest.raises(ConfigError):
            validate_experiment_config("suite", {"name": "smoke"})


class TestParseRange:
    """Test lo:hi range parsing."""

    def test_string_range(self):
        assert parse_range("4:10") == (4, 10)

    def test_tuple_range(self):
        assert parse_range((2, 2)) == (2, 2)

    @pytest.mark.parametrize("value", ["4", "10:4", "-1:3"])
    def test_bad_ranges(self, value):
        """Test malformed and inverted ranges are rejected."""
        with pytest.raises(ValueError):
            parse_range(value)


class TestParseConfigText:
    """Test flat key = value config files."""

    def test_basic_file(self):
        """Test comments, blank lines and quoting."""
        text = (
            "# covering run\n"
            "\n"
            "space = torus1\n"
            "alpha = 0.5   # exponent\n"
            "schedule = \"power:2\"\n"
            "max-level = 12\n"
        )
        assert parse_config_text(text) == {
            "space": "torus1", "alpha": "0.5", "schedule": "power:2", "max_level": "12",
        }

    def test_hash_inside_quotes_kept(self):
        """Test that quoted values may contain a hash."""
        assert parse_config_text("out = 'runs#1'\n") == {"out": "runs#1"}

    def test_malformed_lines(self):
        """Test malformed lines are reported by line number."""
        with pytest.raises(ConfigError) as exc:
            parse_config_text("space = torus1\nnot a pair\nout = 'open\n")
        assert set(exc.value.fields) == {"line 2", "line 3"}
