"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import math

import numpy as np


def check_binary_images(X) -> np.ndarray:
    """Coerce to a (n, side, side) uint8 batch of 0/1 rasters.

    Accepts flat rows of length side**2 as well; the side must be a power
    of two so that the pooling hierarchy closes.
    """
    x = np.asarray(X)
    if x.ndim == 2:
        side = math.isqrt(x.shape[1])
        if side * side != x.shape[1]:
            raise ValueError(f"rows of length {x.shape[1]} do not form square images")
        x = x.reshape(x.shape[0], side, side)
    if x.ndim != 3 or x.shape[1] != x.shape[2]:
        raise ValueError(f"expected (n, side, side) images, got shape {x.shape}")
    side = x.shape[1]
    if side < 2 or side & (side - 1):
        raise ValueError(f"image side must be a power of two >= 2, got {side}")
    if not np.isin(x, (0, 1)).all():
        raise ValueError("images must be binary (0/1 pixels)")
    return x.astype(np.uint8)


def check_classification_targets(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != n_samples:
        raise ValueError(f"targets must be one label per sample, got shape {y.shape}")
    return y
