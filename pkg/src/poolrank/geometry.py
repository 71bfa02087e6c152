"""Pooling geometries: spatial patch orderings, quad groupings and partitions.

A pooling geometry on a ``side x side`` grid (side a power of two) consists of
a bijection from grid positions to patch indexes ``1..N`` together with a
full quad hierarchy: at every level the nodes of the previous level are
partitioned into groups of exactly four.

Two geometries are built in.  ``square`` pools contiguous 2x2 blocks, which
matches a recursive block ordering of the grid.  ``mirror`` pools every
position with its horizontal, vertical and double reflections; the pooled
grid is re-indexed by the top-left representative of each group and the
grouping recurses on that quadrant grid.

Patch indexes are assigned so that the hierarchy is always the canonical
quad tree over ``1..N`` (consecutive quadruples at every level).  Custom
group trees keep their caller-supplied leaf numbering and carry the
relabelling permutation instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_ops import Partition

GEOMETRY_KINDS = ("square", "mirror", "custom")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PatchOrdering:
    """Bijective map from grid positions to patch indexes ``1..side**2``."""

    side: int
    index_of: np.ndarray  # (side, side) int array, values 1..side**2

    def __post_init__(self):
        idx = np.asarray(self.index_of, dtype=np.int64)
        if idx.shape != (self.side, self.side):
            raise ValueError(f"index grid must be {self.side}x{self.side}")
        if sorted(idx.ravel().tolist()) != list(range(1, self.side**2 + 1)):
            raise ValueError("index grid must be a bijection onto 1..side^2")
        idx.setflags(write=False)
        object.__setattr__(self, "index_of", idx)

    @property
    def n(self) -> int:
        return self.side**2

    def position_of(self, index: int) -> tuple[int, int]:
        """Grid position (row, col) of a patch index."""
        r, c = np.argwhere(self.index_of == index)[0]
        return int(r), int(c)

    def inverse(self) -> np.ndarray:
        """Array ``pos`` with ``pos[k-1] = (row, col)`` of patch index k."""
        pos = np.zeros((self.n, 2), dtype=np.int64)
        for r in range(self.side):
            for c in range(self.side):
                pos[self.index_of[r, c] - 1] = (r, c)
        return pos


def square_ordering(side: int) -> PatchOrdering:
    """Recursive block ordering matching contiguous 2x2 pooling.

    Start from a single index 1; at every step the current block is
    replicated to the right, bottom-right and bottom with index offsets of
    one, two and three times the block size.
    """
    if not _is_power_of_two(side) or side < 2:
        raise ValueError(f"side must be a power of two >= 2, got {side}")
    block = np.array([[1]], dtype=np.int64)
    while block.shape[0] < side:
        off = block.size
        top = np.hstack([block, block + off])
        bottom = np.hstack([block + 3 * off, block + 2 * off])
        block = np.vstack([top, bottom])
    return PatchOrdering(side, block)


@dataclass(frozen=True)
class PoolingGeometry:
    """A patch ordering plus the per-level quad grouping over node ids.

    ``groups[l-1][k-1]`` lists the four level-(l-1) node ids pooled into
    node ``k`` of level ``l`` (all ids 1-based).  Level-0 nodes are patch
    indexes.  ``canonical_order[i-1]`` gives the position of leaf ``i`` in
    the canonical quad tree; it is the identity for the built-in kinds.
    """

    kind: str
    ordering: PatchOrdering
    groups: tuple[tuple[tuple[int, ...], ...], ...]
    canonical_order: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise ValueError(f"unsupported geometry kind {self.kind!r}")
        n_nodes = self.ordering.n
        for level, level_groups in enumerate(self.groups, start=1):
            seen: list[int] = []
            for g in level_groups:
                if len(g) != 4:
                    raise ValueError(f"level {level} group {g} does not have exactly 4 members")
                seen.extend(g)
            if sorted(seen) != list(range(1, n_nodes + 1)):
                raise ValueError(f"level {level} groups must cover 1..{n_nodes} exactly once")
            n_nodes //= 4
        if n_nodes != 1:
            raise ValueError("grouping must reduce the patches to a single node")

    @property
    def n(self) -> int:
        return self.ordering.n

    @property
    def levels(self) -> int:
        return len(self.groups)

    def is_canonical(self) -> bool:
        return self.canonical_order == tuple(range(1, self.n + 1))

    def level1_spatial_group(self, row: int, col: int) -> set[tuple[int, int]]:
        """Spatial positions pooled together with ``(row, col)`` at level 1."""
        index = int(self.ordering.index_of[row, col])
        leaf = self.canonical_order[index - 1]
        k = (leaf - 1) // 4
        members = {k * 4 + t for t in range(1, 5)}
        inv_canon = {self.canonical_order[i - 1]: i for i in range(1, self.n + 1)}
        pos = self.ordering.inverse()
        return {tuple(pos[inv_canon[m] - 1]) for m in members}


def _consecutive_quads(n: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    levels = []
    while n > 1:
        levels.append(tuple(tuple(range(4 * k + 1, 4 * k + 5)) for k in range(n // 4)))
        n //= 4
    return tuple(levels)


def _mirror_ordering(side: int) -> PatchOrdering:
    # Bottom-up construction: group every position with its reflections,
    # re-index the pooled grid by top-left representatives, recurse, then
    # expand the resulting tree depth-first to number the leaves.
    grid = [[(i, j) for j in range(side)] for i in range(side)]
    children: dict[tuple[int, int, int], list] = {}
    level = 0
    while len(grid) > 1 or len(grid[0]) > 1:
        h, w = len(grid), len(grid[0])
        new_grid = []
        for i in range(h // 2):
            row = []
            for j in range(w // 2):
                members = [
                    grid[i][j],
                    grid[i][w - 1 - j],
                    grid[h - 1 - i][j],
                    grid[h - 1 - i][w - 1 - j],
                ]
                node = (level + 1, i, j)
                children[node] = members
                row.append(node)
            new_grid.append(row)
        grid = new_grid
        level += 1

    index_of = np.zeros((side, side), dtype=np.int64)
    counter = [0]

    def expand(node):
        if node in children:
            for child in children[node]:
                expand(child)
        else:
            counter[0] += 1
            index_of[node] = counter[0]

    expand(grid[0][0])
    return PatchOrdering(side, index_of)


def build_geometry(kind: str, side: int) -> PoolingGeometry:
    """Construct a built-in pooling geometry for a grid of the given side."""
    if not _is_power_of_two(side) or side < 2:
        raise ValueError(f"side must be a power of two >= 2, got {side}")
    if kind == "square":
        ordering = square_ordering(side)
    elif kind == "mirror":
        ordering = _mirror_ordering(side)
    else:
        raise ValueError(f"unsupported geometry kind {kind!r}; use custom_geometry() for trees")
    n = side**2
    identity = tuple(range(1, n + 1))
    return PoolingGeometry(kind, ordering, _consecutive_quads(n), identity)


def custom_geometry(groups, side: int | None = None, ordering: PatchOrdering | None = None) -> PoolingGeometry:
    """Geometry from an explicit per-level group tree over leaf ids.

    The tree is validated for the exactly-four property; the permutation
    that relabels its leaves into the canonical quad tree is derived by
    depth-first expansion and stored on the geometry.
    """
    groups = tuple(tuple(tuple(int(m) for m in g) for g in level) for level in groups)
    n = 4 * len(groups[0]) if groups else 0
    if side is None:
        side = int(round(n**0.5))
    if side**2 != n:
        raise ValueError(f"group tree covers {n} leaves, not a {side}x{side} grid")
    if ordering is None:
        row_major = np.arange(1, n + 1, dtype=np.int64).reshape(side, side)
        ordering = PatchOrdering(side, row_major)

    order: list[int] = []

    def expand(level: int, node: int):
        if level == 0:
            order.append(node)
        else:
            for child in groups[level - 1][node - 1]:
                expand(level - 1, child)

    top = len(groups)
    if top and len(groups[-1]) != 1:
        raise ValueError("top level must contain a single group")
    expand(top, 1)
    canonical = [0] * n
    for position, leaf in enumerate(order, start=1):
        canonical[leaf - 1] = position
    return PoolingGeometry("custom", ordering, groups, tuple(canonical))


def odd_even_partition(n: int) -> Partition:
    """I holds the odd indexes, J the even ones; splits every quadruple."""
    return Partition(n, tuple(range(1, n + 1, 2)), tuple(range(2, n + 1, 2)))


def low_high_partition(n: int) -> Partition:
    """I holds the lower half of the indexes, J the upper half."""
    if n % 2:
        raise ValueError("low/high split needs an even index count")
    return Partition(n, tuple(range(1, n // 2 + 1)), tuple(range(n // 2 + 1, n + 1)))


NAMED_PARTITIONS = {"odd_even": odd_even_partition, "low_high": low_high_partition}


@dataclass(frozen=True)
class NamedPartition:
    """A partition tagged with the name of the pattern it realizes."""

    name: str
    partition: Partition

    def __post_init__(self):
        builder = NAMED_PARTITIONS.get(self.name)
        if builder is not None and builder(self.partition.n) != self.partition:
            raise ValueError(f"partition does not match the {self.name!r} pattern")
        if builder is None and self.name != "custom_mask":
            raise ValueError(f"unknown partition name {self.name!r}")


def induced_partition(p: Partition, level: int, k: int) -> Partition:
    """Partition induced on the k-th size-``4**level`` index group.

    Side ``I`` of the result is ``(I - (k-1)*4**level)`` intersected with
    ``1..4**level`` and likewise for ``J``; either side may be empty.
    """
    size = 4**level
    if level < 0 or p.n % size or not 1 <= k <= p.n // size:
        raise ValueError(f"no group (level={level}, k={k}) in a partition of {p.n}")
    lo = (k - 1) * size
    i_set = tuple(i - lo for i in p.i_set if lo < i <= lo + size)
    j_set = tuple(j - lo for j in p.j_set if lo < j <= lo + size)
    return Partition(size, i_set, j_set)


def split_count(p: Partition) -> int:
    """Number of size-4 index quadruples with members on both sides of ``p``."""
    if p.n % 4:
        raise ValueError(f"index count {p.n} is not divisible by 4")
    in_i = np.zeros(p.n // 4, dtype=bool)
    in_j = np.zeros(p.n // 4, dtype=bool)
    for i in p.i_set:
        in_i[(i - 1) // 4] = True
    for j in p.j_set:
        in_j[(j - 1) // 4] = True
    return int(np.count_nonzero(in_i & in_j))


def permute_partition(p: Partition, canonical_order: tuple[int, ...]) -> Partition:
    """Relabel a partition through a leaf permutation (id -> new position)."""
    if len(canonical_order) != p.n:
        raise ValueError("permutation length must equal the partition size")
    return Partition.from_i(p.n, (canonical_order[i - 1] for i in p.i_set))


def spatial_pattern_to_partition(mask, ordering: PatchOrdering) -> Partition:
    """Partition whose I side holds the patch indexes of the on pixels."""
    m = np.asarray(mask)
    if m.shape != (ordering.side, ordering.side):
        raise ValueError(f"mask shape {m.shape} does not match side {ordering.side}")
    i_set = sorted(int(ordering.index_of[r, c]) for r, c in np.argwhere(m != 0))
    return Partition.from_i(ordering.n, i_set)


def partition_to_spatial_pattern(p: Partition, ordering: PatchOrdering) -> np.ndarray:
    """Inverse of :func:`spatial_pattern_to_partition` (exact round-trip)."""
    if p.n != ordering.n:
        raise ValueError("partition size does not match the ordering")
    mask = np.zeros((ordering.side, ordering.side), dtype=np.uint8)
    members = set(p.i_set)
    for r in range(ordering.side):
        for c in range(ordering.side):
            if int(ordering.index_of[r, c]) in members:
                mask[r, c] = 1
    return mask


def geometry_to_json(geom: PoolingGeometry) -> dict:
    doc: dict = {"kind": geom.kind, "side": geom.ordering.side}
    if geom.kind == "custom":
        doc["groups"] = [[list(g) for g in level] for level in geom.groups]
        doc["index_grid"] = geom.ordering.index_of.tolist()
    return doc


def geometry_from_json(doc: dict) -> PoolingGeometry:
    kind = doc["kind"]
    side = int(doc["side"])
    if kind in ("square", "mirror"):
        return build_geometry(kind, side)
    if kind == "custom":
        ordering = None
        if "index_grid" in doc:
            ordering = PatchOrdering(side, np.asarray(doc["index_grid"], dtype=np.int64))
        return custom_geometry(doc["groups"], side=side, ordering=ordering)
    raise ValueError(f"unsupported geometry kind {kind!r}")


def partition_to_json(p: Partition) -> dict:
    return {"n": p.n, "i": list(p.i_set)}


def partition_from_json(doc: dict) -> Partition:
    p = Partition.from_i(int(doc["n"]), doc["i"])
    if "j" in doc and tuple(int(v) for v in doc["j"]) != p.j_set:
        raise ValueError("explicit j side conflicts with the complement of i")
    return p
