"""Tests for rectangle limsup sets in product spaces."""
import pytest

from lab.covering import CoveringReport, RadiusSchedule
from lab.errors import InvalidParameterError, PreconditionError
from lab.rectangles import (
    RectangleSpec,
    energy_ratio_exponent,
    rectangle_dimension_experiment,
    rectangle_exponent,
)
from lab.spaces import TorusSpace


@pytest.fixture
def square_spec():
    return RectangleSpec((TorusSpace(1), TorusSpace(1)), (1.0, 2.0))


class TestRectangleSpec:
    @pytest.mark.parametrize("exponents", [(2.0, 1.0), (0.5, 1.0), (1.0,)])
    def test_rejected(self, exponents):
        with pytest.raises(InvalidParameterError):
            RectangleSpec((TorusSpace(1), TorusSpace(1)), exponents)

    def test_canonical_sorts_factors(self):
        spec = RectangleSpec.canonical((TorusSpace(2), TorusSpace(1)), (2, 1))
        assert spec.exponents == (1.0, 2.0)
        assert spec.dims == [1.0, 2.0]
        assert rectangle_exponent(spec).value == pytest.approx(2.0)

    def test_describe(self, square_spec):
        assert square_spec.describe() == {'factors': ['torus1', 'torus1'], 'a': [1.0, 2.0],
                                          'schedule': 'power', 'alpha': 0.5, 'scale': 1.0}


class TestExponents:
    """Test the rectangle exponent and the energy ratio exponent."""

    def test_unequal_sides(self, square_spec):
        report = rectangle_exponent(square_spec)
        assert report.value == pytest.approx(1.5)
        assert report.argmin == 2
        assert [row['value'] for row in report.table] == pytest.approx([2.0, 1.5])

    def test_square_sides(self):
        report = rectangle_exponent(RectangleSpec((TorusSpace(1), TorusSpace(1)), (1.0, 1.0)))
        assert report.value == pytest.approx(2.0)
        assert report.argmin == 1

    @pytest.mark.parametrize("t, j, exponent", [
        (0.5, 1, 1.5),
        (1.0, 1, 1.0),
        (1.5, 2, 0.0),
        (2.0, 2, -1.0),
    ])
    def test_energy_ratio(self, square_spec, t, j, exponent):
        result = energy_ratio_exponent(square_spec, t)
        assert result['j'] == j
        assert result['exponent'] == pytest.approx(exponent)

    @pytest.mark.parametrize("t", [0.0, 2.5])
    def test_energy_ratio_range(self, square_spec, t):
        with pytest.raises(InvalidParameterError):
            energy_ratio_exponent(square_spec, t)


class TestRectangleExperiment:
    """Test the rectangle dimension experiment."""

    def test_single_factor_is_covering(self):
        spec = RectangleSpec((TorusSpace(1),), (1.0,))
        report = rectangle_dimension_experiment(spec, n_max=20_000, levels=(2, 6), seed=1)
        assert isinstance(report, CoveringReport)

    def test_balls_must_cover(self):
        spec = RectangleSpec((TorusSpace(1), TorusSpace(1)), (1.0, 2.0), RadiusSchedule.power(2))
        with pytest.raises(PreconditionError):
            rectangle_dimension_experiment(spec, n_max=2_000, levels=(4, 8), seed=1)

    @pytest.mark.slow
    def test_dimension_matches_exponent(self, square_spec):
        report = rectangle_dimension_experiment(square_spec, n_max=100_000, levels=(4, 10), seed=1)
        assert report.exponent.value == pytest.approx(1.5)
        assert abs(report.dim.slope - 1.5) <= 0.15
        assert report.ball_measure >= 0.99
