"""Patch orderings, pooling geometries, induced partitions, split counts."""

import numpy as np
import pytest

from poolrank.geometry import (
    NamedPartition,
    Partition,
    build_geometry,
    custom_geometry,
    geometry_from_json,
    geometry_to_json,
    induced_partition,
    low_high_partition,
    odd_even_partition,
    partition_from_json,
    partition_to_json,
    partition_to_spatial_pattern,
    permute_partition,
    spatial_pattern_to_partition,
    split_count,
    square_ordering,
)


class TestSquareOrdering:
    def test_side_two(self):
        assert square_ordering(2).index_of.tolist() == [[1, 2], [4, 3]]

    def test_side_four_hand_positions(self):
        idx = square_ordering(4).index_of
        assert idx[0, 2] == 5
        assert idx[2, 0] == 13
        assert idx[3, 3] == 11

    def test_bijective(self):
        for side in (2, 4, 8, 16, 32):
            idx = square_ordering(side).index_of
            assert sorted(idx.ravel().tolist()) == list(range(1, side**2 + 1))

    def test_rejects_non_power_of_two(self):
        for side in (0, 1, 3, 6):
            with pytest.raises(ValueError):
                square_ordering(side)

    def test_position_roundtrip(self):
        ordering = square_ordering(4)
        for k in range(1, 17):
            r, c = ordering.position_of(k)
            assert ordering.index_of[r, c] == k


class TestBuildGeometry:
    def test_square_level1_group_is_top_left_block(self):
        geom = build_geometry("square", 4)
        first_group = geom.groups[0][0]
        positions = {geom.ordering.position_of(i) for i in first_group}
        assert positions == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_square_side_two_single_group(self):
        geom = build_geometry("square", 2)
        assert geom.groups == (((1, 2, 3, 4),),)

    def test_square_groups_are_consecutive_quadruples(self):
        geom = build_geometry("square", 8)
        for level_groups in geom.groups:
            for k, g in enumerate(level_groups):
                assert g == tuple(range(4 * k + 1, 4 * k + 5))

    def test_mirror_group_of_corner(self):
        geom = build_geometry("mirror", 4)
        assert geom.level1_spatial_group(0, 0) == {(0, 0), (0, 3), (3, 0), (3, 3)}

    def test_mirror_level1_groups_reflection_invariant(self):
        geom = build_geometry("mirror", 8)
        side = 8
        for k in range(len(geom.groups[0])):
            group = geom.groups[0][k]
            positions = {geom.ordering.position_of(i) for i in group}
            flipped_lr = {(r, side - 1 - c) for r, c in positions}
            flipped_ud = {(side - 1 - r, c) for r, c in positions}
            assert positions == flipped_lr == flipped_ud

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            build_geometry("hex", 4)


class TestCustomGeometry:
    def test_relabelling_permutation(self):
        # Swap the roles of leaves 1..4 and 5..8 inside the first two quads.
        groups = [
            [(5, 6, 7, 8), (1, 2, 3, 4), (9, 10, 11, 12), (13, 14, 15, 16)],
            [(1, 2, 3, 4)],
        ]
        geom = custom_geometry(groups)
        # Depth-first order visits 5,6,7,8 first, so leaf 5 gets position 1.
        assert geom.canonical_order[4] == 1
        assert geom.canonical_order[0] == 5
        p = Partition.from_i(16, [5, 6, 7, 8])
        relabeled = permute_partition(p, geom.canonical_order)
        assert relabeled.i_set == (1, 2, 3, 4)

    def test_group_size_enforced(self):
        with pytest.raises(ValueError):
            custom_geometry([[(1, 2, 3), (4, 5, 6, 7)]])


class TestNamedPartitions:
    def test_odd_even(self):
        p = odd_even_partition(8)
        assert p.i_set == (1, 3, 5, 7) and p.j_set == (2, 4, 6, 8)

    def test_low_high(self):
        p = low_high_partition(8)
        assert p.i_set == (1, 2, 3, 4) and p.j_set == (5, 6, 7, 8)

    def test_named_partition_validation(self):
        with pytest.raises(ValueError):
            NamedPartition("odd_even", low_high_partition(8))
        NamedPartition("odd_even", odd_even_partition(8))


class TestInducedPartition:
    def test_odd_even_level1(self):
        sub = induced_partition(odd_even_partition(16), 1, 1)
        assert sub.i_set == (1, 3) and sub.j_set == (2, 4)

    def test_low_high_level1(self):
        sub = induced_partition(low_high_partition(16), 1, 1)
        assert sub.i_set == (1, 2, 3, 4) and sub.j_set == ()

    def test_level0_trivial(self):
        p = Partition.from_i(8, [2, 5, 6])
        for k in range(1, 9):
            sub = induced_partition(p, 0, k)
            if k in p.i_set:
                assert sub.i_set == (1,) and sub.j_set == ()
            else:
                assert sub.i_set == () and sub.j_set == (1,)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            induced_partition(odd_even_partition(16), 1, 5)

    def test_union_of_shifted_blocks_reconstructs(self):
        rng = np.random.default_rng(10)
        p = Partition.from_i(64, [i + 1 for i in range(64) if rng.integers(0, 2)])
        for level in (0, 1, 2):
            size = 4**level
            rebuilt = []
            for k in range(1, 64 // size + 1):
                sub = induced_partition(p, level, k)
                rebuilt.extend(i + (k - 1) * size for i in sub.i_set)
            assert tuple(sorted(rebuilt)) == p.i_set


class TestSplitCount:
    def test_odd_even_splits_everything(self):
        for n in (4, 16, 64, 1024):
            assert split_count(odd_even_partition(n)) == n // 4

    def test_low_high_splits_nothing(self):
        assert split_count(low_high_partition(16)) == 0

    def test_empty_side(self):
        assert split_count(Partition.from_i(16, [])) == 0

    def test_matches_induced_partitions(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = Partition.from_i(16, [i + 1 for i in range(16) if rng.integers(0, 2)])
            both = sum(
                1
                for k in range(1, 5)
                if induced_partition(p, 1, k).i_set and induced_partition(p, 1, k).j_set
            )
            assert split_count(p) == both

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError):
            split_count(Partition.from_i(6, [1]))


class TestSpatialPatterns:
    def test_all_ones_mask(self):
        ordering = square_ordering(4)
        p = spatial_pattern_to_partition(np.ones((4, 4)), ordering)
        assert p.i_set == tuple(range(1, 17)) and p.j_set == ()

    def test_left_half_mask(self):
        ordering = square_ordering(4)
        mask = np.zeros((4, 4))
        mask[:, :2] = 1
        p = spatial_pattern_to_partition(mask, ordering)
        assert p.i_set == (1, 2, 3, 4, 13, 14, 15, 16)
        assert p.j_set == tuple(range(5, 13))  # the right half holds 5..12

    def test_checkerboard_side2(self):
        p = spatial_pattern_to_partition(np.eye(2), square_ordering(2))
        assert p.i_set == (1, 3) and p.j_set == (2, 4)

    def test_roundtrip(self):
        rng = np.random.default_rng(12)
        ordering = square_ordering(8)
        mask = rng.integers(0, 2, size=(8, 8))
        p = spatial_pattern_to_partition(mask, ordering)
        assert np.array_equal(partition_to_spatial_pattern(p, ordering), mask)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            spatial_pattern_to_partition(np.ones((2, 2)), square_ordering(4))


class TestSerialization:
    def test_geometry_roundtrip(self):
        for kind in ("square", "mirror"):
            geom = build_geometry(kind, 4)
            doc = geometry_to_json(geom)
            assert doc == {"kind": kind, "side": 4}
            back = geometry_from_json(doc)
            assert np.array_equal(back.ordering.index_of, geom.ordering.index_of)

    def test_custom_geometry_roundtrip(self):
        groups = [
            [(5, 6, 7, 8), (1, 2, 3, 4), (9, 10, 11, 12), (13, 14, 15, 16)],
            [(1, 2, 3, 4)],
        ]
        geom = custom_geometry(groups)
        back = geometry_from_json(geometry_to_json(geom))
        assert back.groups == geom.groups
        assert back.canonical_order == geom.canonical_order

    def test_partition_roundtrip(self):
        p = odd_even_partition(16)
        doc = partition_to_json(p)
        assert doc == {"n": 16, "i": [1, 3, 5, 7, 9, 11, 13, 15]}
        assert partition_from_json(doc) == p

    def test_partition_json_conflicting_j(self):
        with pytest.raises(ValueError):
            partition_from_json({"n": 4, "i": [1, 2], "j": [2, 3]})
