"""Dense tensor algebra: tensor products, matricizations, Kronecker products and ranks.

Tensors are plain numpy arrays in row-major (C) layout, which makes the entry
at multi-index ``(d_1, ..., d_N)`` (1-based) live at flat offset
``sum_t (d_t - 1) * prod_{t' > t} M_{t'}``.  All matricizations below follow
that same digit convention, so results are bit-reproducible across
implementations that agree on it.

Two rank paths are provided: a floating-point SVD rank with a relative
tolerance, and an exact rank over the rationals for integer matrices
(fraction-free elimination).  The exact path exists so that rank statements
about integer-valued weight settings can be checked without any tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Refuse to materialize results larger than this many elements unless the
# caller raises the limit explicitly.
DEFAULT_MAX_ELEMENTS = 1 << 24

# Integer entries beyond this magnitude cannot be trusted through float64.
_SAFE_INT = 1 << 53


class CapacityError(RuntimeError):
    """Raised when an operation would materialize an oversized array."""


def _check_capacity(n_elements: int, max_elements: int, what: str) -> None:
    if n_elements > max_elements:
        raise CapacityError(
            f"{what} would hold {n_elements} elements, over the limit of "
            f"{max_elements}; raise max_elements to override"
        )


def as_tensor(a) -> np.ndarray:
    """Validate and convert ``a`` to a float64 tensor of order >= 1.

    Order-0 inputs are rejected: scalars must be passed as order-1,
    dimension-1 tensors.
    """
    t = np.asarray(a, dtype=np.float64)
    if t.ndim == 0:
        raise ValueError("order-0 tensors are disallowed; use shape (1,) for scalars")
    if min(t.shape) < 1:
        raise ValueError(f"tensor dimensions must be positive, got shape {t.shape}")
    return t


def as_matrix(m) -> np.ndarray:
    """Validate and convert ``m`` to a 2-d float64 matrix."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array of order {a.ndim}")
    if min(a.shape) < 1:
        raise ValueError(f"matrix dimensions must be positive, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Partition:
    """An ordered disjoint pair of index sets covering ``{1, ..., n}``.

    Indexes are 1-based.  Either side may be empty, in which case the
    matricization w.r.t. the partition degenerates to a row or column
    vector.
    """

    n: int
    i_set: tuple[int, ...]
    j_set: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("partition requires n >= 1")
        object.__setattr__(self, "i_set", tuple(int(i) for i in self.i_set))
        object.__setattr__(self, "j_set", tuple(int(j) for j in self.j_set))
        for name, side in (("i_set", self.i_set), ("j_set", self.j_set)):
            if any(b <= a for a, b in zip(side, side[1:])):
                raise ValueError(f"{name} must be strictly increasing, got {side}")
        union = set(self.i_set) | set(self.j_set)
        if len(self.i_set) + len(self.j_set) != self.n or union != set(range(1, self.n + 1)):
            raise ValueError(
                f"i_set {self.i_set} and j_set {self.j_set} must disjointly cover 1..{self.n}"
            )

    @classmethod
    def from_i(cls, n: int, i_set) -> "Partition":
        """Build a partition from one side; the other side is the complement."""
        i = tuple(sorted(int(v) for v in i_set))
        j = tuple(v for v in range(1, n + 1) if v not in set(i))
        return cls(n, i, j)

    def swapped(self) -> "Partition":
        """The partition with the two sides exchanged."""
        return Partition(self.n, self.j_set, self.i_set)

    def __str__(self):  # pragma: no cover - debugging aid
        return f"(I={list(self.i_set)}, J={list(self.j_set)})"


def tensor_product(a, b, max_elements: int = DEFAULT_MAX_ELEMENTS) -> np.ndarray:
    """Tensor product of ``a`` (order P) and ``b`` (order Q), order P+Q.

    Entry ``(d_1..d_{P+Q})`` of the result equals
    ``a[d_1..d_P] * b[d_{P+1}..d_{P+Q}]``.  For two vectors this is the
    standard outer product.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    _check_capacity(a.size * b.size, max_elements, "tensor product")
    return np.multiply.outer(a, b)


def matricize(a, p: Partition) -> np.ndarray:
    """Rearrange tensor ``a`` as a matrix w.r.t. the partition ``p``.

    Rows are indexed by the modes in ``p.i_set`` (in increasing order) and
    columns by the modes in ``p.j_set``, both with row-major digit order.
    An empty row (column) side yields a single-row (single-column) matrix.
    """
    a = as_tensor(a)
    if p.n != a.ndim:
        raise ValueError(f"partition covers {p.n} modes but tensor has order {a.ndim}")
    axes = [i - 1 for i in p.i_set] + [j - 1 for j in p.j_set]
    rows = int(np.prod([a.shape[i - 1] for i in p.i_set], dtype=object)) if p.i_set else 1
    return np.ascontiguousarray(a.transpose(axes).reshape(rows, -1))


def kronecker(a, b, max_elements: int = DEFAULT_MAX_ELEMENTS) -> np.ndarray:
    """Kronecker product: ``a[i,j]*b[k,l]`` at row ``(i-1)*N1+k``, col ``(j-1)*N2+l``."""
    a = as_matrix(a)
    b = as_matrix(b)
    _check_capacity(a.size * b.size, max_elements, "Kronecker product")
    return np.kron(a, b)


def singular_values(m) -> np.ndarray:
    """Singular values of ``m``, non-negative and descending.

    Raises ``ValueError`` on non-finite entries and ``np.linalg.LinAlgError``
    if the SVD fails to converge (never silently truncated).
    """
    a = as_matrix(m)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return np.linalg.svd(a, compute_uv=False)


def numerical_rank(m, rel_tol: float = 1e-9) -> int:
    """Count of singular values above ``rel_tol`` times the largest one.

    Returns 0 for the zero matrix.  ``rel_tol`` must lie in (0, 1).
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
    s = singular_values(m)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def exact_rank_integer(m) -> int:
    """Rank over the rationals of an integer matrix.

    Entries must be integral and within the float64-safe range.  Zero rows
    and columns are pruned, then rank is computed by fraction-free (Bareiss)
    elimination on exact Python integers, so the result carries no
    floating-point tolerance.
    """
    a = as_matrix(m)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if np.any(np.abs(a) > _SAFE_INT) or not np.array_equal(a, np.round(a)):
        raise ValueError("exact_rank_integer requires integral entries in the safe range")
    keep_rows = np.any(a != 0.0, axis=1)
    keep_cols = np.any(a != 0.0, axis=0)
    a = a[np.ix_(keep_rows, keep_cols)]
    if a.size == 0:
        return 0
    rows = [[int(v) for v in row] for row in a]
    return _bareiss_rank(rows)


def _bareiss_rank(rows: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination; intermediate values stay integral."""
    n_rows = len(rows)
    n_cols = len(rows[0])
    rank = 0
    prev_pivot = 1
    col_order = list(range(n_cols))
    while rank < n_rows and rank < n_cols:
        # Find a nonzero pivot in the remaining submatrix.
        pivot = None
        for i in range(rank, n_rows):
            for jj in range(rank, n_cols):
                if rows[i][col_order[jj]] != 0:
                    pivot = (i, jj)
                    break
            if pivot:
                break
        if pivot is None:
            break
        pi, pj = pivot
        rows[rank], rows[pi] = rows[pi], rows[rank]
        col_order[rank], col_order[pj] = col_order[pj], col_order[rank]
        pc = col_order[rank]
        pval = rows[rank][pc]
        for i in range(rank + 1, n_rows):
            row_i = rows[i]
            factor = row_i[pc]
            if factor == 0 and pval == prev_pivot:
                continue
            prow = rows[rank]
            for jj in range(rank + 1, n_cols):
                c = col_order[jj]
                row_i[c] = (row_i[c] * pval - factor * prow[c]) // prev_pivot
            row_i[pc] = 0
        prev_pivot = pval
        rank += 1
    return rank
