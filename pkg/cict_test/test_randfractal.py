"""Tests for limsup random fractals."""
import numpy as np
import pytest

from lab.errors import InvalidParameterError, UnsupportedModelError
from lab.randfractal import (
    BlockCoupled,
    CallableSurvival,
    Independent,
    RandomFractalModel,
    SplitSurvival,
    UniformSurvival,
    correlation_count,
    dimension_bounds,
    empirical_indices,
    fractal_dimension_experiment,
    simulate_level,
)


class TestSurvivalRules:
    def test_uniform(self, torus_tree):
        p = UniformSurvival(0.5).probabilities(torus_tree, 4, np.arange(4))
        assert np.allclose(p, 0.25)

    def test_split(self, torus_tree):
        p = SplitSurvival(0.2, 0.6).probabilities(torus_tree, 2, np.arange(4))
        assert np.allclose(p, [0.5 ** 0.4, 0.5 ** 0.4, 0.5 ** 1.2, 0.5 ** 1.2])

    @pytest.mark.parametrize("factory", [
        lambda: UniformSurvival(-0.1),
        lambda: SplitSurvival(0.6, 0.2),
        lambda: BlockCoupled(-1.0),
    ])
    def test_invalid(self, factory):
        with pytest.raises(InvalidParameterError):
            factory()

    def test_callable_range_checked(self, torus_tree):
        rule = CallableSurvival(lambda level, idx: np.full(idx.shape, 1.5))
        with pytest.raises(InvalidParameterError):
            rule.probabilities(torus_tree, 2, np.arange(4))


class TestSimulation:
    """Test level simulation and coupling."""

    def test_deterministic(self, torus_tree):
        model = RandomFractalModel(UniformSurvival(0.5), seed=3)
        assert simulate_level(model, torus_tree, 8) == simulate_level(model, torus_tree, 8)

    def test_monotone_coupling(self, torus_tree):
        """Test one coin per cube couples two exponents monotonically."""
        thin = simulate_level(RandomFractalModel(UniformSurvival(0.6), seed=9), torus_tree, 10)
        thick = simulate_level(RandomFractalModel(UniformSurvival(0.3), seed=9), torus_tree, 10)
        assert thin.issubset(thick)

    def test_block_coupling_shares_coins(self, torus_tree):
        model = RandomFractalModel(UniformSurvival(0.5), BlockCoupled(0.5), seed=2)
        survivors = simulate_level(model, torus_tree, 8)
        blocks = survivors.indices // 16
        for block in np.unique(blocks):
            assert np.sum(blocks == block) == 16


class TestIndices:
    """Test survival and correlation indices."""

    def test_block_size(self, torus_tree):
        assert BlockCoupled(0.5).block_size(torus_tree, 4) == 4
        assert Independent().block_size(torus_tree, 4) == 1

    def test_correlation_count(self, torus_tree):
        coupled = RandomFractalModel(UniformSurvival(0.5), BlockCoupled(0.5))
        independent = RandomFractalModel(UniformSurvival(0.5))
        assert correlation_count(coupled, torus_tree, 4, 0.01) == 4
        assert correlation_count(independent, torus_tree, 4, 0.01) == 1

    def test_split_indices(self, torus_tree):
        report = empirical_indices(RandomFractalModel(SplitSurvival(0.2, 0.6)), torus_tree, range(1, 9))
        assert report.gamma1_hat == pytest.approx(0.2)
        assert report.gamma2_hat == pytest.approx(0.6)
        assert report.delta_hat == pytest.approx(0.0)

    def test_block_delta(self, torus_tree):
        model = RandomFractalModel(UniformSurvival(0.5), BlockCoupled(0.5))
        assert empirical_indices(model, torus_tree, [2, 4, 6, 8]).delta_hat == pytest.approx(0.5)

    def test_callable_has_no_indices(self, torus_tree):
        model = RandomFractalModel(CallableSurvival(lambda level, idx: np.full(idx.shape, 0.5)))
        with pytest.raises(UnsupportedModelError):
            empirical_indices(model, torus_tree, range(1, 5))

    def test_bounds(self):
        assert dimension_bounds(1, 0.5, 0.5, 0) == (0.5, 0.5)
        assert dimension_bounds(1, 0.4, 1.2, 0) == (0.0, 0.6)


class TestFractalExperiment:
    """Test the windowed dimension experiment."""

    def test_everything_survives(self, torus_tree):
        report = fractal_dimension_experiment(RandomFractalModel(UniformSurvival(0.0)), torus_tree, (1, 12))
        assert not report.extinct
        assert report.measure == pytest.approx(1.0)
        assert report.dim.slope == pytest.approx(1.0)
        assert report.in_bounds is True

    def test_extinction(self, torus_tree):
        report = fractal_dimension_experiment(RandomFractalModel(UniformSurvival(40.0)), torus_tree, (1, 12))
        assert report.extinct
        assert report.extinction_level == 1
        assert report.dim is None
        assert report.to_dict()['in_bounds'] is None

    @pytest.mark.slow
    def test_half_exponent_within_bounds(self, torus_tree):
        report = fractal_dimension_experiment(
            RandomFractalModel(UniformSurvival(0.5), seed=20240601), torus_tree, (1, 12))
        assert report.bounds == pytest.approx((0.5, 0.5))
        assert report.in_bounds
