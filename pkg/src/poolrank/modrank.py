"""Exact matricization ranks of sampled circuits via modular arithmetic.

Every float64 weight is an exact dyadic rational, so the coefficient tensor
it induces has a well-defined rank over the rationals.  Floating SVD ranks
systematically undercount it: the trailing singular values of long
Kronecker chains have heavy-tailed conditioning and routinely fall below
float64 resolution even when the exact rank is maximal.

This module computes the exact rank instead, by mapping the weights to
residues modulo a few large primes, running the matricized recursion in
modular arithmetic (cheap int64 numpy throughout), and Gauss-eliminating
the result.  The rank modulo a prime never exceeds the rational rank, and
it only falls short when the prime divides a relevant minor, so the
maximum over several fixed primes is the rational rank with overwhelming
probability, deterministically for a given weight draw.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .circuits import NetworkSpec, WeightSetting, _apply_geometry
from .geometry import induced_partition
from .tensor_ops import Partition

# Primes near 2^20: kronecker products of residues stay far below 2^63.
DEFAULT_PRIMES = (1048573, 1000003, 999983)


def _residues(arr: np.ndarray, prime: int) -> np.ndarray:
    """Exact residues of float entries read as the rationals they are."""
    flat = []
    for v in np.asarray(arr, dtype=np.float64).ravel():
        frac = Fraction(v)
        flat.append(frac.numerator % prime * pow(frac.denominator, prime - 2, prime) % prime)
    return np.array(flat, dtype=np.int64).reshape(np.shape(arr))


def rank_mod_prime(mat: np.ndarray, prime: int) -> int:
    """Row-echelon rank of an integer matrix over GF(prime)."""
    m = np.asarray(mat, dtype=np.int64) % prime
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(m[r:, c])[0]
        if hits.size == 0:
            continue
        i = r + int(hits[0])
        if i != r:
            m[[r, i]] = m[[i, r]]
        inv = pow(int(m[r, c]), prime - 2, prime)
        m[r] = (m[r] * inv) % prime
        below = m[r + 1 :, c]
        nz = np.nonzero(below)[0]
        if nz.size:
            m[r + 1 + nz] = (m[r + 1 + nz] - np.outer(below[nz], m[r])) % prime
        r += 1
    return r


def _vector_block(vec_stack: np.ndarray, sub: Partition) -> np.ndarray:
    # Matricization of a vector: column when its lone mode is on the I side.
    if sub.i_set:
        return vec_stack[:, :, None]
    return vec_stack[:, None, :]


def _kron_stack(children: list[np.ndarray], mixing: np.ndarray, prime: int) -> np.ndarray:
    width_in = children[0].shape[0]
    width_out = mixing.shape[0]
    blocks = []
    for a in range(width_in):
        k = np.kron(children[0][a], children[1][a]) % prime
        k = np.kron(k, np.kron(children[2][a], children[3][a]) % prime) % prime
        blocks.append(k)
    out = np.zeros((width_out, blocks[0].shape[0], blocks[0].shape[1]), dtype=np.int64)
    for a in range(width_in):
        out = (out + mixing[:, a, None, None] * blocks[a]) % prime
    return out


def _matricized_mod_deep(
    spec: NetworkSpec, w: WeightSetting, y: int, p: Partition, prime: int
) -> np.ndarray:
    conv0 = _residues(w.conv0, prime)
    convs = [_residues(c, prime) for c in w.conv]
    out_row = _residues(w.out[y - 1 : y], prime)
    levels = spec.levels
    n = spec.n_patches

    def distinct(level):
        seen = {}
        for k in range(1, n // 4**level + 1):
            sub = induced_partition(p, level, k)
            seen.setdefault((sub.i_set, sub.j_set), sub)
        return seen.items()

    cache = {key: _vector_block(conv0, sub) for key, sub in distinct(0)}
    for l in range(1, levels):
        nxt = {}
        for key, sub in distinct(l):
            children = [
                cache[_key(induced_partition(sub, l - 1, t))] for t in range(1, 5)
            ]
            nxt[key] = _kron_stack(children, convs[l - 1], prime)
        cache = nxt
    children = [cache[_key(induced_partition(p, levels - 1, t))] for t in range(1, 5)]
    return _kron_stack(children, out_row, prime)[0]


def _key(sub: Partition):
    return (sub.i_set, sub.j_set)


def _matricized_mod_shallow(
    spec: NetworkSpec, w: WeightSetting, y: int, p: Partition, prime: int
) -> np.ndarray:
    conv0 = _residues(w.conv0, prime)
    out_row = _residues(w.out[y - 1], prime)
    n_i, n_j = len(p.i_set), len(p.j_set)
    total = np.zeros((spec.m_rep**n_i, spec.m_rep**n_j), dtype=np.int64)
    for g in range(spec.widths[0]):
        u = np.ones(1, dtype=np.int64)
        for _ in range(n_i):
            u = np.kron(u, conv0[g]) % prime
        v = np.ones(1, dtype=np.int64)
        for _ in range(n_j):
            v = np.kron(v, conv0[g]) % prime
        total = (total + out_row[g] * np.outer(u, v) % prime) % prime
    return total


def exact_matricized_rank(
    spec: NetworkSpec,
    w: WeightSetting,
    y: int,
    p: Partition,
    primes: tuple[int, ...] = DEFAULT_PRIMES,
) -> int:
    """Rank over the rationals of the matricized coefficient tensor.

    Treats the stored float weights as exact dyadic rationals; the result
    carries no floating-point tolerance.
    """
    w.validate_for(spec)
    if p.n != spec.n_patches:
        raise ValueError("partition size does not match the circuit")
    best = 0
    for prime in primes:
        if spec.depth_kind == "deep":
            q = _apply_geometry(spec, p)
            mat = _matricized_mod_deep(spec, w, y, q, prime)
        else:
            mat = _matricized_mod_shallow(spec, w, y, p, prime)
        best = max(best, rank_mod_prime(mat, prime))
    return best
