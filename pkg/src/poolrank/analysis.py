"""Rank bounds, rank statistics and the separability distance of circuits.

The matricization rank of a circuit's coefficient tensor w.r.t. a partition
measures how strongly the realized function can correlate the two sides of
the partition.  For deep circuits that rank is sandwiched between an
exponential lower bound driven by the number of split quadruples and a
recursive upper bound accumulated up the quad tree; for shallow circuits it
is capped by the hidden width.  Bounds are computed on exact Python
integers, since they overflow any fixed-width type already at moderate
patch counts.

Two independent cross-checks are provided: a sampling report of how often
random weight draws attain the maximal observed rank, and a brute-force
oracle that evaluates the realized function on every binary input and reads
the rank off the table of values (valid for the two-channel binary
representation, whose per-patch value table is invertible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import NetworkSpec, WeightSetting, matricized_deep, matricized_shallow, random_weights
from .geometry import induced_partition, split_count
from .parallel import map_parallel
from .tensor_ops import CapacityError, Partition, numerical_rank, singular_values


@dataclass(frozen=True)
class BoundReport:
    """Rank bounds for one circuit and partition.

    ``c_table[l][k-1]`` is the per-node cap at level ``l`` (level 0 is all
    ones); ``lower`` is only defined for deep circuits.
    """

    lower: int | None
    upper: int
    s_stat: int | None
    c_table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.lower is not None and self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    def to_json(self) -> dict:
        return {
            "lower": None if self.lower is None else str(self.lower),
            "upper": str(self.upper),
            "s": self.s_stat,
            "c_table": [[str(c) for c in level] for level in self.c_table],
        }


def deep_rank_lower_bound(spec: NetworkSpec, p: Partition) -> int:
    """``min(r_0, M)`` raised to the number of split quadruples (exact int)."""
    _require_deep(spec, p)
    return min(spec.widths[0], spec.m_rep) ** split_count(p)


def deep_rank_upper_bound(spec: NetworkSpec, p: Partition) -> BoundReport:
    """Recursive rank cap of the deep circuit, with the full per-node table.

    Every node's cap is the smaller of its matricization's side and the
    width-weighted product of its four children's caps; the root combines
    the last level with the output width.
    """
    _require_deep(spec, p)
    n, m = spec.n_patches, spec.m_rep
    levels = spec.levels
    c_table: list[tuple[int, ...]] = [tuple([1] * n)]
    for l in range(1, levels):
        prev = c_table[l - 1]
        row = []
        for k in range(1, n // 4**l + 1):
            sub = induced_partition(p, l, k)
            side_cap = m ** min(len(sub.i_set), len(sub.j_set))
            child_prod = math.prod(prev[4 * (k - 1) + t] for t in range(4))
            row.append(min(side_cap, spec.widths[l - 1] * child_prod))
        c_table.append(tuple(row))
    top_children = math.prod(c_table[levels - 1][t] for t in range(4))
    upper = min(
        m ** min(len(p.i_set), len(p.j_set)),
        spec.widths[-1] * top_children,
    )
    lower = deep_rank_lower_bound(spec, p)
    return BoundReport(lower, upper, split_count(p), tuple(c_table))


def shallow_rank_upper_bound(spec: NetworkSpec, p: Partition) -> int:
    """Rank cap of the shallow circuit: ``min(M**min(|I|,|J|), r_0)``."""
    if spec.depth_kind != "shallow":
        raise ValueError("spec is not a shallow circuit")
    if p.n != spec.n_patches:
        raise ValueError("partition size does not match the circuit")
    return min(spec.m_rep ** min(len(p.i_set), len(p.j_set)), spec.widths[0])


def _require_deep(spec: NetworkSpec, p: Partition) -> None:
    if spec.depth_kind != "deep":
        raise ValueError("bound is defined for deep circuits")
    if p.n != spec.n_patches:
        raise ValueError("partition size does not match the circuit")


def matricized_for(spec: NetworkSpec, w: WeightSetting, y: int, p: Partition, **kw) -> np.ndarray:
    """Matricized coefficient tensor, dispatching on the depth kind."""
    if spec.depth_kind == "deep":
        return matricized_deep(spec, w, y, p, **kw)
    return matricized_shallow(spec, w, y, p, **kw)


@dataclass(frozen=True)
class RankMaximalityReport:
    """How often sampled weight draws attain the maximal observed rank."""

    max_rank_observed: int
    fraction_at_max: float
    trials: int
    ranks: tuple[int, ...]
    method: str = "exact"

    def to_json(self) -> dict:
        return {
            "max_rank": self.max_rank_observed,
            "fraction": self.fraction_at_max,
            "trials": self.trials,
        }


def rank_maximality_report(
    spec: NetworkSpec,
    p: Partition,
    trials: int,
    seed: int,
    rel_tol: float = 1e-9,
    dist: str = "gaussian",
    y: int = 1,
    method: str = "exact",
) -> RankMaximalityReport:
    """Sample weight draws and report the concentration at the top rank.

    Trial ``t`` uses seed ``seed + t`` so results are independent of
    scheduling.  The maximum is the one observed over the trial set, not a
    certified global maximum.

    The default method reads each drawn weight as the exact dyadic rational
    it is and computes the exact rank (see :mod:`poolrank.modrank`); the
    ``numerical`` method applies the SVD rank at ``rel_tol`` instead, which
    undercounts draws whose trailing singular values fall below float
    resolution.
    """
    if trials < 1:
        raise ValueError("at least one trial is required")
    if method not in ("exact", "numerical"):
        raise ValueError(f"unknown rank method {method!r}")

    def one_rank(t: int) -> int:
        w = random_weights(spec, seed + t, dist)
        if method == "exact":
            from .modrank import exact_matricized_rank

            return exact_matricized_rank(spec, w, y, p)
        return numerical_rank(matricized_for(spec, w, y, p), rel_tol)

    ranks = tuple(map_parallel(one_rank, range(trials)))
    max_rank = max(ranks)
    fraction = sum(r == max_rank for r in ranks) / trials
    return RankMaximalityReport(max_rank, fraction, trials, ranks, method)


def evaluate_on_binary_grid(spec: NetworkSpec, w: WeightSetting, y: int) -> np.ndarray:
    """Realized function value on every assignment of binary patches.

    The representation is fixed to the two-channel binary pair (identity
    and negation), so patch t with bit b contributes the channel values
    ``(b, 1 - b)``.  Returns an array of length ``2**N`` indexed by the
    assignment read as a big-endian bit string, computed by a direct-space
    forward pass (independent of the matricized recursion).
    """
    if spec.m_rep != 2:
        raise ValueError("the binary grid evaluation requires exactly 2 channels")
    w.validate_for(spec)
    n = spec.n_patches
    if 2**n > 1 << 24:
        raise CapacityError(f"2**{n} binary assignments exceed the evaluation limit")
    count = 1 << n
    bits = ((np.arange(count)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1).astype(
        np.float64
    )
    rep = np.stack([bits, 1.0 - bits], axis=-1)  # (count, n, 2)
    h = rep @ w.conv0.T  # (count, n, r0)
    if spec.depth_kind == "deep":
        for l in range(1, spec.levels):
            h = h.reshape(count, h.shape[1] // 4, 4, h.shape[2]).prod(axis=2)
            h = h @ w.conv[l - 1].T
        h = h.reshape(count, h.shape[1] // 4, 4, h.shape[2]).prod(axis=2)
    else:
        h = h.reshape(count, 1, n, h.shape[2]).prod(axis=2)
    out = h[:, 0, :] @ w.out.T  # (count, outputs)
    return out[:, y - 1]


def grid_oracle_rank(
    spec: NetworkSpec,
    w: WeightSetting,
    y: int,
    p: Partition,
    rel_tol: float = 1e-9,
) -> int:
    """Rank of the value table of the realized function over binary inputs.

    Values are arranged as a ``2**|I|`` by ``2**|J|`` matrix indexed by the
    assignments of the two partition sides.  Because every patch's
    two-channel value table is invertible, this matrix has the same rank as
    the matricized coefficient tensor, which makes it an independent
    desk-scale oracle for rank claims.
    """
    values = evaluate_on_binary_grid(spec, w, y)
    n = spec.n_patches
    i_axes = np.array([i - 1 for i in p.i_set], dtype=np.int64)
    j_axes = np.array([j - 1 for j in p.j_set], dtype=np.int64)
    bits = (np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    row_weights = 1 << np.arange(len(i_axes) - 1, -1, -1) if len(i_axes) else np.array([], dtype=np.int64)
    col_weights = 1 << np.arange(len(j_axes) - 1, -1, -1) if len(j_axes) else np.array([], dtype=np.int64)
    rows = bits[:, i_axes] @ row_weights if len(i_axes) else np.zeros(1 << n, dtype=np.int64)
    cols = bits[:, j_axes] @ col_weights if len(j_axes) else np.zeros(1 << n, dtype=np.int64)
    table = np.zeros((1 << len(i_axes), 1 << len(j_axes)))
    table[rows, cols] = values
    return numerical_rank(table, rel_tol)


@dataclass(frozen=True)
class DistanceReport:
    """Normalized distance of a realized function from the separable ones.

    ``d_value`` is the spectral formula ``sqrt(1 - top/total)`` over the
    squared singular values of the matricized coefficient tensor (valid for
    orthonormal representation channels, e.g. the binary pair);
    ``ub_from_rank`` is the rank-driven cap ``sqrt(1 - 1/rank)``.
    """

    d_value: float
    spectral_energy: float
    top_energy: float
    ub_from_rank: float
    lb_deep: float | None = None

    def to_json(self) -> dict:
        doc = {"d": self.d_value, "ub": self.ub_from_rank}
        doc["lb"] = self.lb_deep
        return doc


def separability_distance(m, rel_tol: float = 1e-9, lb_deep: float | None = None) -> DistanceReport:
    """Spectral separability distance of a matricized coefficient tensor.

    Undefined (raises ``ValueError``) for the zero matrix, whose realized
    function has no normalized distance.
    """
    s = singular_values(m)
    total = float(np.sum(s**2))
    if total == 0.0:
        raise ValueError("separability distance is undefined for the zero matrix")
    top = float(s[0] ** 2)
    d = math.sqrt(max(0.0, 1.0 - top / total))
    rank = int(np.count_nonzero(s > rel_tol * s[0]))
    ub = math.sqrt(1.0 - 1.0 / rank)
    return DistanceReport(d, total, top, ub, lb_deep)


def deep_distance_lower_bound(spec: NetworkSpec, p: Partition) -> float:
    """Largest separability distance a deep circuit can reach for ``p``:
    ``sqrt(1 - min(r_0, M) ** -s)`` with ``s`` the split count."""
    _require_deep(spec, p)
    base = min(spec.widths[0], spec.m_rep)
    s = split_count(p)
    if base == 1 or s == 0:
        return 0.0
    return math.sqrt(1.0 - float(base) ** (-s))
