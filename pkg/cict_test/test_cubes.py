"""Tests for generalized dyadic cubes and cube sets."""

import numpy as np
import pytest

from lab.cubes import (
    CubeId,
    CubeSet,
    audit_tree,
    ball_to_cubeset,
    build_tree,
    cubeset_diameter,
    factor_radii,
    sandwich_constants,
    union_of_boxes,
)
from lab.errors import InvalidInputError, InvalidParameterError, ResolutionExceededError
from lab.spaces import Ball, SymbolicSpace, TorusSpace


class TestBuildTree:
    """Test tree construction."""

    def test_torus_counts(self, torus2):
        tree = build_tree(torus2, 0.5, max_level=6)
        assert tree.branching == 4
        assert tree.count(3) == 64
        assert tree.cube_measure(3) == pytest.approx(1 / 64)

    def test_torus_ratio_must_be_reciprocal(self, torus1):
        with pytest.raises(InvalidParameterError):
            build_tree(torus1, 0.3)

    def test_symbolic_ratio_fixed(self, symbolic2):
        with pytest.raises(InvalidParameterError):
            build_tree(symbolic2, 0.25)

    def test_symbolic_depth_limit(self, symbolic2):
        with pytest.raises(InvalidParameterError):
            build_tree(symbolic2, max_level=70)

    def test_sandwich_constants(self, torus1):
        """Test exact constants at b = 1/2 and the general formula below 1/3."""
        assert sandwich_constants(torus1, 0.5) == (0.5, 0.5)
        c1, c1p = sandwich_constants(torus1, 0.25)
        assert c1 == pytest.approx(1 / 6)
        assert c1p == pytest.approx(4 / 3)

    def test_level_beyond_max(self, torus_tree):
        with pytest.raises(ResolutionExceededError):
            torus_tree.check_level(13)


class TestCubeAddressing:
    """Test locating points and cube identifiers."""

    def test_cube_containing(self, torus_tree):
        cube = torus_tree.cube_containing(np.array([0.3]), 3)
        assert cube == CubeId(3, (0, 1, 0))
        assert cube.parent() == CubeId(2, (0, 1))
        assert cube.label(2) == "010"

    def test_root_has_no_parent(self):
        with pytest.raises(InvalidInputError):
            CubeId(0, ()).parent()
        assert CubeId(0, ()).label(2) == "-"

    def test_path_length_checked(self):
        with pytest.raises(InvalidInputError):
            CubeId(2, (0,))

    def test_index_round_trip(self, symbolic_tree):
        for index in (0, 5, 77, 255):
            cube = symbolic_tree.cube_id(8, index)
            assert symbolic_tree.index_of(cube) == index

    def test_centers_located_in_own_cube(self, torus_tree):
        indices = np.arange(torus_tree.count(6))
        centers = torus_tree.centers(6, indices)
        assert np.array_equal(torus_tree.locate(centers, 6), indices)


class TestCubeSet:
    """Test set algebra on finite-resolution cube sets."""

    def test_refine_and_ancestors(self, symbolic_tree):
        cubes = CubeSet(symbolic_tree, 1, [1])
        fine = cubes.refine(3)
        assert list(fine.indices) == [4, 5, 6, 7]
        assert fine.measure == pytest.approx(0.5)
        assert fine.ancestors(1) == cubes

    def test_mixed_level_algebra(self, symbolic_tree):
        """Test operands at different levels are aligned to the finer one."""
        left = CubeSet(symbolic_tree, 1, [0])
        right = CubeSet(symbolic_tree, 2, [1, 2])
        assert list(left.union(right).indices) == [0, 1, 2]
        assert list(left.intersect(right).indices) == [1]
        assert list(left.difference(right).indices) == [0]
        assert list(left.complement(2).indices) == [2, 3]
        assert right.intersect(left).issubset(left)

    def test_equality_across_levels(self, symbolic_tree):
        assert CubeSet(symbolic_tree, 1, [0]) == CubeSet(symbolic_tree, 2, [0, 1])

    def test_index_out_of_range(self, symbolic_tree):
        with pytest.raises(InvalidInputError):
            CubeSet(symbolic_tree, 2, [4])

    def test_contains(self, torus_tree):
        cubes = CubeSet(torus_tree, 2, [1])
        inside = cubes.contains(np.array([[0.3], [0.6]]))
        assert list(inside) == [True, False]

    def test_text_format(self, torus_tree):
        text = CubeSet(torus_tree, 2, [1, 3]).to_text()
        assert text.splitlines() == ["# space=torus1 b=0.5 level=2 count=2", "01", "11"]
        assert CubeSet.from_text(torus_tree, text) == CubeSet(torus_tree, 2, [1, 3])

    def test_text_needs_header(self, torus_tree):
        with pytest.raises(InvalidInputError):
            CubeSet.from_text(torus_tree, "01\n")


class TestBallConversion:
    """Test inner and outer cube approximations of balls."""

    @pytest.mark.parametrize("level, inner, outer", [
        (4, 0.375, 0.5),
        (5, 0.4375, 0.5),
    ])
    def test_circle_hand_values(self, torus_tree, level, inner, outer):
        ball = Ball(np.array([0.5]), 0.25)
        assert ball_to_cubeset(torus_tree, ball, level, "inner").measure == pytest.approx(inner)
        assert ball_to_cubeset(torus_tree, ball, level, "outer").measure == pytest.approx(outer)

    def test_inner_inside_outer(self, torus_tree):
        ball = Ball(np.array([0.123]), 0.07)
        inner = ball_to_cubeset(torus_tree, ball, 8, "inner")
        outer = ball_to_cubeset(torus_tree, ball, 8, "outer")
        assert inner.issubset(outer)

    def test_zero_radius_is_empty(self, torus_tree):
        assert ball_to_cubeset(torus_tree, Ball(np.array([0.5]), 0.0), 4).is_empty()

    def test_huge_ball_is_everything(self, torus_tree):
        cubes = ball_to_cubeset(torus_tree, Ball(np.array([0.5]), 0.9), 4)
        assert cubes.measure == pytest.approx(1.0)

    def test_unknown_mode(self, torus_tree):
        with pytest.raises(InvalidInputError):
            ball_to_cubeset(torus_tree, Ball(np.array([0.5]), 0.1), 4, "middle")

    def test_product_box(self, torus_square):
        """Test a box with unequal sides covers the matching cube block."""
        tree = build_tree(torus_square, 0.5, max_level=6)
        centers = (np.array([[0.5]]), np.array([[0.5]]))
        cubes = union_of_boxes(tree, centers, factor_radii(tree, [0.25, 0.125]), 4, "inner")
        # 6 x 2 cubes of side 1/16
        assert len(cubes) == 12


class TestDiameter:
    """Test cube set diameters."""

    def test_single_cube(self, torus_tree):
        assert cubeset_diameter(CubeSet(torus_tree, 3, [0])) == pytest.approx(0.125)

    def test_whole_circle(self, torus_tree):
        assert cubeset_diameter(CubeSet.full(torus_tree, 3)) == pytest.approx(0.5)

    def test_empty(self, torus_tree):
        assert cubeset_diameter(CubeSet.empty(torus_tree, 3)) == 0.0


class TestTreeAudit:
    """Test the cube axiom audit."""

    def test_torus_quarter(self, torus1):
        audit = audit_tree(build_tree(torus1, 0.25, max_level=6), seed=3)
        assert audit.passed
        assert audit.properties["center_nesting"] is True

    def test_torus_half_skips_center_nesting(self, torus1):
        audit = audit_tree(build_tree(torus1, 0.5, max_level=8), seed=3)
        assert audit.passed
        assert audit.properties["center_nesting"] is None

    def test_symbolic(self, symbolic2):
        audit = audit_tree(build_tree(symbolic2, max_level=8), seed=3)
        assert audit.passed
        assert audit.to_dict()["failures"] == []
