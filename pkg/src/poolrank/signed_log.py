"""Sign-aware log-space arithmetic for product-pooling circuits.

Values are carried as a pair of arrays: a sign in {-1, 0, +1} and the
natural log of the magnitude, with -inf as the zero sentinel (sign is 0
exactly where the magnitude is -inf).  Products add log-magnitudes and
multiply signs, so chains of thousands of factors neither overflow nor
underflow.  Linear channel mixes factor out the per-position maximum
magnitude and fall back to one ordinary matmul on numbers of modulus at
most one, which is the stable signed analogue of log-sum-exp.
"""

from __future__ import annotations

import numpy as np

NEG_INF = -np.inf


def from_values(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split real values into (sign, log magnitude); zeros map to (0, -inf)."""
    x = np.asarray(x, dtype=np.float64)
    sign = np.sign(x)
    with np.errstate(divide="ignore"):
        logmag = np.where(sign != 0.0, np.log(np.abs(np.where(x == 0.0, 1.0, x))), NEG_INF)
    return sign, logmag


def to_values(sign: np.ndarray, logmag: np.ndarray) -> np.ndarray:
    """Direct-space values; overflows for magnitudes beyond float range."""
    return sign * np.exp(logmag)


def product_pool(sign: np.ndarray, logmag: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Product over non-overlapping windows along axis 1.

    A window containing any zero factor produces an exact zero.
    """
    b, p, c = sign.shape
    if p % window:
        raise ValueError(f"{p} positions do not split into windows of {window}")
    s = sign.reshape(b, p // window, window, c).prod(axis=2)
    m = logmag.reshape(b, p // window, window, c).sum(axis=2)
    m = np.where(s == 0.0, NEG_INF, m)
    return s, m


def linear(
    sign: np.ndarray, logmag: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Mix channels linearly: out_g = sum_a weights[g, a] * value_a.

    Applies along the last axis.  Returns the signed-log result plus the
    intermediates needed for the reverse pass: the inputs rescaled by the
    per-position peak magnitude and the rescaled outputs.
    """
    peak = logmag.max(axis=-1, keepdims=True)
    shift = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(invalid="ignore"):
        u = sign * np.exp(logmag - shift)
    u = np.nan_to_num(u, nan=0.0)
    y = u @ weights.T
    out_sign = np.sign(y)
    with np.errstate(divide="ignore"):
        out_logmag = np.where(out_sign != 0.0, shift + np.log(np.abs(np.where(y == 0.0, 1.0, y))), NEG_INF)
    return out_sign, out_logmag, (u, y)


def linear_backward(
    adj_logmag: np.ndarray, u: np.ndarray, y: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse the linear mix through output log-magnitudes.

    Given the adjoint of the output log-magnitudes, returns the weight
    gradient and the adjoint of the input log-magnitudes.  Positions where
    the mixed output is exactly zero propagate no gradient.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(y != 0.0, adj_logmag / y, 0.0)
    axes = tuple(range(u.ndim - 1))
    grad_w = np.tensordot(q, u, axes=(axes, axes))
    adj_in = u * (q @ weights)
    return grad_w, adj_in
