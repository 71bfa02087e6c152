"""Plain PBM (P1) reading and writing for binary rasters.

The writer emits a canonical layout: magic line, dimension line, then one
raster row per line with no separators.  The reader is whitespace tolerant
and accepts comments, packed or spaced digits, and arbitrary line breaks.
"""

from __future__ import annotations

import numpy as np


def write_pbm(path, image: np.ndarray) -> None:
    img = np.asarray(image)
    if img.ndim != 2 or not np.isin(img, (0, 1)).all():
        raise ValueError("PBM images must be 2-d arrays of 0/1 values")
    h, w = img.shape
    lines = [f"P1\n{w} {h}\n"]
    lines += ["".join("1" if v else "0" for v in row) + "\n" for row in img]
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


def read_pbm(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    tokens: list[str] = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        tokens.extend(body.split())
    if not tokens or tokens[0] != "P1":
        raise ValueError(f"{path}: not a plain PBM (P1) file")
    try:
        w, h = int(tokens[1]), int(tokens[2])
    except (IndexError, ValueError):
        raise ValueError(f"{path}: malformed PBM dimensions")
    digits = "".join(tokens[3:])
    if len(digits) != w * h or set(digits) - {"0", "1"}:
        raise ValueError(f"{path}: expected {w * h} raster bits")
    data = np.frombuffer(digits.encode("ascii"), dtype=np.uint8) - ord("0")
    return data.reshape(h, w).astype(np.uint8)
