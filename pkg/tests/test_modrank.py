"""Exact modular rank of float-weight matricizations."""

import numpy as np
import pytest

from poolrank.circuits import NetworkSpec, canonical_weights, random_weights
from poolrank.geometry import low_high_partition, odd_even_partition
from poolrank.modrank import exact_matricized_rank, rank_mod_prime
from poolrank.tensor_ops import Partition, exact_rank_integer


class TestRankModPrime:
    def test_identity(self):
        assert rank_mod_prime(np.eye(5, dtype=np.int64), 1000003) == 5

    def test_matches_exact_rank_on_random_integer_matrices(self):
        rng = np.random.default_rng(60)
        for _ in range(100):
            rows, cols = rng.integers(1, 10, size=2)
            m = rng.integers(-4, 5, size=(rows, cols))
            assert rank_mod_prime(m, 1048573) == exact_rank_integer(m.astype(float))

    def test_prime_divisibility_handled_by_second_prime(self):
        # Over GF(p) this matrix is singular by construction; the true
        # rational rank is recovered by a prime that does not divide it.
        p = 1000003
        m = np.array([[1, 1], [1, 1 + p]])
        assert rank_mod_prime(m, p) == 1
        assert rank_mod_prime(m, 999983) == 2


class TestExactMatricizedRank:
    def test_agrees_with_integer_path_on_canonical_weights(self):
        spec = NetworkSpec(16, 2, (2, 2))
        w = canonical_weights(spec)
        for p in (odd_even_partition(16), low_high_partition(16), Partition.from_i(16, [1, 4, 9])):
            from poolrank.analysis import matricized_for

            assert exact_matricized_rank(spec, w, 1, p) == exact_rank_integer(
                matricized_for(spec, w, 1, p)
            )

    def test_never_below_the_svd_rank(self):
        from poolrank.analysis import matricized_for
        from poolrank.tensor_ops import numerical_rank

        rng = np.random.default_rng(61)
        deep = NetworkSpec(16, 2, (2, 2))
        shallow = NetworkSpec(16, 2, (3,), depth_kind="shallow")
        for spec in (deep, shallow):
            for t in range(10):
                w = random_weights(spec, 70 + t)
                mask = rng.integers(0, 2, size=16)
                p = Partition.from_i(16, [i + 1 for i in range(16) if mask[i]])
                exact = exact_matricized_rank(spec, w, 1, p)
                assert exact >= numerical_rank(matricized_for(spec, w, 1, p))
                if spec.depth_kind == "deep":
                    from poolrank.analysis import deep_rank_upper_bound

                    assert exact <= deep_rank_upper_bound(spec, p).upper

    def test_gaussian_draws_concentrate_at_max(self):
        spec = NetworkSpec(16, 2, (2, 2))
        p = odd_even_partition(16)
        ranks = [
            exact_matricized_rank(spec, random_weights(spec, 80 + t), 1, p) for t in range(25)
        ]
        assert ranks.count(16) == 25

    def test_partition_size_checked(self):
        spec = NetworkSpec(16, 2, (2, 2))
        w = random_weights(spec, 0)
        with pytest.raises(ValueError):
            exact_matricized_rank(spec, w, 1, odd_even_partition(4))
