"""Tests for net content and the large-intersection certificate."""
import numpy as np
import pytest

from lab.cubes import CubeId, CubeSet, build_tree
from lab.errors import BruteForceRefusedError, InvalidInputError, InvalidParameterError
from lab.netcontent import li_certificate, li_certificate_grid, net_content, net_content_bruteforce
from lab.spaces import TorusSpace


@pytest.fixture
def three_words(symbolic_tree):
    """F = {00, 01, 10} at level 2."""
    return CubeSet(symbolic_tree, 2, [0, 1, 2])


class TestNetContent:
    """Test the bottom-up cheapest cover."""

    def test_root_is_cheapest(self, symbolic_tree, three_words):
        result = net_content(symbolic_tree, three_words, 0.5)
        assert result.value == pytest.approx(1.0)
        assert result.cover == [CubeId(0, ())]

    def test_within_cube(self, symbolic_tree, three_words):
        result = net_content(symbolic_tree, three_words, 0.5, within=CubeId(1, (0,)))
        assert result.value == pytest.approx(2 ** -0.5)
        assert result.cover == [CubeId(1, (0,))]

    def test_mixed_cover(self, symbolic_tree, three_words):
        result = net_content(symbolic_tree, three_words, 1.0)
        assert result.value == pytest.approx(0.75)
        assert result.cover == [CubeId(1, (0,)), CubeId(2, (1, 0))]
        assert result.to_dict(2)['cover'] == ['0', '10']

    def test_empty_set(self, symbolic_tree):
        result = net_content(symbolic_tree, CubeSet.empty(symbolic_tree, 3), 0.5)
        assert result.value == 0.0
        assert result.cover == []

    def test_cube_outside_set(self, symbolic_tree, three_words):
        assert net_content(symbolic_tree, three_words, 0.5, within=CubeId(2, (1, 1))).value == 0.0

    @pytest.mark.parametrize("t", [0.0, 0.3, 0.5, 1.0])
    def test_agrees_with_brute_force(self, symbolic_tree, t):
        rng = np.random.default_rng(7)
        F = CubeSet(symbolic_tree, 4, rng.choice(16, size=6, replace=False))
        exact = net_content(symbolic_tree, F, t).value
        assert net_content_bruteforce(symbolic_tree, F, t) == pytest.approx(exact)

    def test_torus_agrees_with_brute_force(self):
        tree = build_tree(TorusSpace(2), 0.5, max_level=4)
        F = CubeSet(tree, 2, [0, 3, 5, 6, 15])
        assert net_content_bruteforce(tree, F, 1.2) == pytest.approx(net_content(tree, F, 1.2).value)

    def test_brute_force_refuses_deep_sets(self, symbolic_tree):
        with pytest.raises(BruteForceRefusedError):
            net_content_bruteforce(symbolic_tree, CubeSet(symbolic_tree, 5, [0]), 0.5)

    def test_negative_exponent(self, symbolic_tree, three_words):
        with pytest.raises(InvalidParameterError):
            net_content(symbolic_tree, three_words, -1.0)

    def test_foreign_tree(self, three_words, symbolic2):
        other = build_tree(symbolic2, max_level=4)
        with pytest.raises(InvalidInputError):
            net_content(other, three_words, 0.5)


class TestCertificate:
    """Test content ratios over all cubes."""

    def test_full_set_passes(self, symbolic_tree):
        cert = li_certificate(symbolic_tree, CubeSet.full(symbolic_tree, 3), 0.5, 3)
        assert cert.min_c == pytest.approx(1.0)
        assert cert.passes

    def test_missing_cube_fails(self, symbolic_tree):
        F = CubeSet.full(symbolic_tree, 3).difference(CubeSet(symbolic_tree, 3, [5]))
        cert = li_certificate(symbolic_tree, F, 0.5, 3)
        assert cert.min_c == 0.0
        assert cert.argmin == CubeId(3, (1, 0, 1))
        record = cert.to_dict(2)
        assert record['argminCube'] == '101'
        assert record['passes'] is False
        assert sum(record['histogram']['counts']) == 1 + 2 + 4 + 8

    def test_per_level_minimum(self, symbolic_tree):
        cert = li_certificate(symbolic_tree, CubeSet.full(symbolic_tree, 4), 0.5, 2)
        assert set(cert.levels) == {0, 1, 2}
        assert cert.level == 4

    def test_grid(self, symbolic_tree):
        certs = li_certificate_grid(symbolic_tree, CubeSet.full(symbolic_tree, 3), [0.2, 0.6], 2)
        assert [c.t for c in certs] == [0.2, 0.6]

    def test_negative_depth(self, symbolic_tree):
        with pytest.raises(InvalidParameterError):
            li_certificate(symbolic_tree, CubeSet.full(symbolic_tree, 3), 0.5, -1)


class TestMonotonicity:
    """Test content is monotone in the set and in the exponent."""

    def test_larger_set_costs_more(self, symbolic_tree):
        small = CubeSet(symbolic_tree, 4, [0, 5, 9])
        large = small.union(CubeSet(symbolic_tree, 4, [12, 13]))
        for t in (0.2, 0.7, 1.0):
            assert net_content(symbolic_tree, small, t).value <= net_content(symbolic_tree, large, t).value

    def test_non_increasing_in_t(self, symbolic_tree):
        F = CubeSet(symbolic_tree, 5, [1, 2, 8, 30])
        values = [net_content(symbolic_tree, F, t).value for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert values == sorted(values, reverse=True)

    def test_root_bound(self, symbolic_tree):
        F = CubeSet(symbolic_tree, 6, range(0, 64, 3))
        assert net_content(symbolic_tree, F, 0.6).value <= 1.0
