"""Rank bounds, maximality sampling, the binary grid oracle and distances."""

import math

import numpy as np
import pytest

from poolrank.analysis import (
    deep_distance_lower_bound,
    deep_rank_lower_bound,
    deep_rank_upper_bound,
    grid_oracle_rank,
    matricized_for,
    rank_maximality_report,
    separability_distance,
    shallow_rank_upper_bound,
)
from poolrank.circuits import NetworkSpec, WeightSetting, canonical_weights, random_weights
from poolrank.geometry import low_high_partition, odd_even_partition
from poolrank.tensor_ops import Partition, numerical_rank


def random_partition(rng, n):
    mask = rng.integers(0, 2, size=n)
    return Partition.from_i(n, [i + 1 for i in range(n) if mask[i]])


def best_rank_one_distance(a: np.ndarray, rng: np.random.Generator, iters: int = 400) -> float:
    """Independent oracle: alternating optimization of a scaled rank-1 fit."""
    best = np.inf
    for _ in range(5):
        v = rng.standard_normal(a.shape[1])
        v /= np.linalg.norm(v)
        for _ in range(iters):
            u = a @ v
            nu = np.linalg.norm(u)
            if nu == 0:
                break
            u /= nu
            v = a.T @ u
            nv = np.linalg.norm(v)
            if nv == 0:
                break
            v /= nv
        c = u @ a @ v
        best = min(best, np.linalg.norm(a - c * np.outer(u, v)))
    return best


class TestDeepLowerBound:
    def test_interleaved_n16(self):
        spec = NetworkSpec(16, 2, (2, 2))
        assert deep_rank_lower_bound(spec, odd_even_partition(16)) == 16

    def test_interleaved_n1024_exact_bigint(self):
        spec = NetworkSpec(1024, 2, (2,) * 5)
        assert deep_rank_lower_bound(spec, odd_even_partition(1024)) == 2**256

    def test_one_sided_partition(self):
        spec = NetworkSpec(16, 2, (2, 2))
        assert deep_rank_lower_bound(spec, low_high_partition(16)) == 1

    def test_shallow_rejected(self):
        with pytest.raises(ValueError):
            deep_rank_lower_bound(NetworkSpec(4, 2, (2,), depth_kind="shallow"), odd_even_partition(4))


class TestDeepUpperBound:
    def test_one_sided_collapses_to_top_width(self):
        spec = NetworkSpec(16, 2, (2, 2))
        report = deep_rank_upper_bound(spec, low_high_partition(16))
        assert report.upper == 2
        assert report.c_table[0] == (1,) * 16

    def test_interleaved_hand_trace(self):
        spec = NetworkSpec(16, 2, (2, 2))
        report = deep_rank_upper_bound(spec, odd_even_partition(16))
        assert report.c_table[1] == (2, 2, 2, 2)
        assert report.upper == 32
        assert report.lower == 16 and report.s_stat == 4

    def test_empty_side_gives_one(self):
        spec = NetworkSpec(16, 2, (2, 2))
        report = deep_rank_upper_bound(spec, Partition.from_i(16, []))
        assert report.upper == 1

    def test_report_json_uses_decimal_strings(self):
        spec = NetworkSpec(1024, 3, (2, 4, 4, 4, 4))
        doc = deep_rank_upper_bound(spec, odd_even_partition(1024)).to_json()
        assert doc["lower"] == str(2**256)
        assert int(doc["upper"]) >= int(doc["lower"])


class TestShallowUpperBound:
    def test_width_limited(self):
        spec = NetworkSpec(16, 2, (4,), depth_kind="shallow")
        assert shallow_rank_upper_bound(spec, Partition.from_i(16, range(1, 9))) == 4

    def test_single_channel(self):
        spec = NetworkSpec(16, 2, (1,), depth_kind="shallow")
        assert shallow_rank_upper_bound(spec, odd_even_partition(16)) == 1

    def test_side_limited(self):
        spec = NetworkSpec(16, 2, (100,), depth_kind="shallow")
        assert shallow_rank_upper_bound(spec, Partition.from_i(16, [1])) == 2


class TestRankSandwich:
    def test_random_draws_stay_under_cap(self):
        rng = np.random.default_rng(40)
        spec = NetworkSpec(16, 2, (2, 3), outputs=2)
        for draw in range(20):
            w = random_weights(spec, 300 + draw)
            p = random_partition(rng, 16)
            rank = numerical_rank(matricized_for(spec, w, 1, p))
            assert rank <= deep_rank_upper_bound(spec, p).upper

    def test_canonical_weights_attain_lower_bound(self):
        from poolrank.tensor_ops import exact_rank_integer

        for m, r in ((2, 2), (3, 2), (2, 3)):
            spec = NetworkSpec(16, m, (r, r))
            w = canonical_weights(spec)
            p = odd_even_partition(16)
            mat = matricized_for(spec, w, 1, p, max_block_elements=1 << 26)
            assert exact_rank_integer(mat) == deep_rank_lower_bound(spec, p) == min(m, r) ** 4


class TestRankMaximality:
    def test_single_trial_is_trivially_at_max(self):
        spec = NetworkSpec(4, 2, (2,))
        report = rank_maximality_report(spec, odd_even_partition(4), trials=1, seed=0)
        assert report.fraction_at_max == 1.0

    def test_single_channel_shallow_rank_one(self):
        spec = NetworkSpec(4, 2, (1,), depth_kind="shallow")
        report = rank_maximality_report(spec, odd_even_partition(4), trials=10, seed=1)
        assert report.max_rank_observed == 1
        assert report.fraction_at_max == 1.0

    def test_concentration_on_interleaved_partition(self):
        spec = NetworkSpec(16, 2, (2, 2))
        report = rank_maximality_report(spec, odd_even_partition(16), trials=20, seed=2)
        assert report.max_rank_observed == 16
        assert report.fraction_at_max >= 0.95

    def test_numerical_method_undercounts_but_never_overcounts(self):
        spec = NetworkSpec(16, 2, (2, 2))
        p = odd_even_partition(16)
        exact = rank_maximality_report(spec, p, trials=10, seed=4)
        svd = rank_maximality_report(spec, p, trials=10, seed=4, method="numerical")
        assert all(s <= e for s, e in zip(svd.ranks, exact.ranks))

    def test_threaded_run_matches_serial(self, monkeypatch):
        spec = NetworkSpec(16, 2, (2, 2))
        p = odd_even_partition(16)
        serial = rank_maximality_report(spec, p, trials=8, seed=3)
        monkeypatch.setenv("POOLRANK_THREADS", "4")
        threaded = rank_maximality_report(spec, p, trials=8, seed=3)
        assert serial.ranks == threaded.ranks


class TestGridOracle:
    def test_separable_function_rank_one(self):
        spec = NetworkSpec(4, 2, (1,), depth_kind="shallow")
        w = random_weights(spec, 41)
        for i_side in ([], [1], [1, 3], [1, 2, 3, 4]):
            p = Partition.from_i(4, i_side)
            assert grid_oracle_rank(spec, w, 1, p) <= 1

    def test_zero_function_rank_zero(self):
        spec = NetworkSpec(4, 2, (2,))
        zero = WeightSetting(np.zeros((2, 2)), (), np.zeros((1, 2)))
        assert grid_oracle_rank(spec, zero, 1, odd_even_partition(4)) == 0

    def test_agrees_with_matricized_rank(self):
        rng = np.random.default_rng(42)
        deep = NetworkSpec(16, 2, (2, 2), outputs=2)
        shallow = NetworkSpec(16, 2, (3,), depth_kind="shallow", outputs=2)
        for spec in (deep, shallow):
            for draw in range(3):
                w = random_weights(spec, 400 + draw)
                for _ in range(3):
                    p = random_partition(rng, 16)
                    direct = numerical_rank(matricized_for(spec, w, 1, p))
                    assert grid_oracle_rank(spec, w, 1, p) == direct

    def test_requires_two_channels(self):
        spec = NetworkSpec(4, 3, (2,))
        w = random_weights(spec, 43)
        with pytest.raises(ValueError):
            grid_oracle_rank(spec, w, 1, odd_even_partition(4))


class TestSeparabilityDistance:
    def test_rank_one_matrix_is_separable(self):
        report = separability_distance(np.diag([1.0, 0.0]))
        assert report.d_value == 0.0

    def test_flat_spectrum(self):
        for k in (2, 3, 5):
            report = separability_distance(np.eye(k))
            assert math.isclose(report.d_value, math.sqrt(1 - 1 / k), rel_tol=1e-12)
            assert math.isclose(report.ub_from_rank, report.d_value, rel_tol=1e-12)

    def test_matches_tail_energy_and_rank_one_fit(self):
        rng = np.random.default_rng(44)
        for _ in range(10):
            a = rng.standard_normal((6, 5))
            report = separability_distance(a)
            s = np.linalg.svd(a, compute_uv=False)
            tail = math.sqrt(np.sum(s[1:] ** 2) / np.sum(s**2))
            assert math.isclose(report.d_value, tail, rel_tol=1e-10)
            fitted = best_rank_one_distance(a, rng) / np.linalg.norm(a)
            assert math.isclose(report.d_value, fitted, rel_tol=1e-6)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            separability_distance(np.zeros((3, 3)))

    def test_bounded_by_rank_cap(self):
        rng = np.random.default_rng(45)
        for _ in range(50):
            a = rng.standard_normal((4, 7))
            report = separability_distance(a)
            assert report.d_value <= report.ub_from_rank + 1e-12

    def test_strictly_monotone_in_tail_energy(self):
        previous = -1.0
        for t in np.linspace(0.1, 1.0, 10):
            d = separability_distance(np.diag([1.0, t, t])).d_value
            assert d > previous
            previous = d


class TestDeepDistanceLowerBound:
    def test_zero_splits(self):
        spec = NetworkSpec(16, 2, (2, 2))
        assert deep_distance_lower_bound(spec, low_high_partition(16)) == 0.0

    def test_formula_value(self):
        spec = NetworkSpec(16, 2, (2, 2))
        value = deep_distance_lower_bound(spec, odd_even_partition(16))
        assert math.isclose(value, math.sqrt(1 - 1 / 16), rel_tol=1e-12)

    def test_single_effective_channel(self):
        spec = NetworkSpec(16, 2, (1, 4))
        assert deep_distance_lower_bound(spec, odd_even_partition(16)) == 0.0

    def test_attained_by_canonical_weights(self):
        spec = NetworkSpec(16, 2, (2, 2))
        w = canonical_weights(spec)
        mat = matricized_for(spec, w, 1, odd_even_partition(16))
        report = separability_distance(mat)
        expected = deep_distance_lower_bound(spec, odd_even_partition(16))
        assert math.isclose(report.d_value, expected, abs_tol=1e-9)
