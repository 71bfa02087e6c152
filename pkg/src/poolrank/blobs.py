"""Synthetic blob benchmark: distorted ovals with holes, scored and labeled.

Every image is a binary raster showing one randomly distorted ellipse whose
interior has been punctured.  Two scores are attached: closedness (fraction
of the blob's morphological closure that the blob itself covers) and
left-right symmetry (overlap of the blob with the horizontal flip of its
bounding box).  Sorting by a score and labeling the top 40% high and the
bottom 40% low yields one binary classification task per score; the middle
fifth is excluded as ill-defined.

Datasets round-trip through a directory of PBM images plus a CSV manifest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .parallel import map_parallel
from .pbm import read_pbm, write_pbm

LABELS = ("high", "low", "excluded")
SPLITS = ("train", "test")
TRAIN_FRACTION = 5 / 6  # global id split; per-task sets intersect it with labels


def morphological_closure(image: np.ndarray) -> np.ndarray:
    """Fill interior gaps: pad, 4-neighbor dilation, 4-neighbor erosion, unpad.

    The output always contains the input, and applying the operation twice
    changes nothing.
    """
    img = np.asarray(image, dtype=bool)
    padded = np.pad(img, 1)
    dilated = padded.copy()
    dilated[1:, :] |= padded[:-1, :]
    dilated[:-1, :] |= padded[1:, :]
    dilated[:, 1:] |= padded[:, :-1]
    dilated[:, :-1] |= padded[:, 1:]
    eroded = dilated.copy()
    eroded[1:, :] &= dilated[:-1, :]
    eroded[:-1, :] &= dilated[1:, :]
    eroded[:, 1:] &= dilated[:, :-1]
    eroded[:, :-1] &= dilated[:, 1:]
    eroded[0, :] = eroded[-1, :] = False
    eroded[:, 0] = eroded[:, -1] = False
    return eroded[1:-1, 1:-1].astype(np.uint8)


def closedness(image: np.ndarray) -> float:
    """Pixels in the blob over pixels in its closure, in (0, 1]."""
    img = np.asarray(image, dtype=bool)
    active = int(img.sum())
    if active == 0:
        raise ValueError("closedness is undefined for an empty image")
    return active / int(morphological_closure(img).sum())


def symmetry(image: np.ndarray) -> float:
    """Overlap of the blob with the left-right flip of its bounding box."""
    img = np.asarray(image, dtype=bool)
    active = int(img.sum())
    if active == 0:
        raise ValueError("symmetry is undefined for an empty image")
    rows = np.any(img, axis=1)
    cols = np.any(img, axis=0)
    box = img[rows.argmax() : len(rows) - rows[::-1].argmax(), cols.argmax() : len(cols) - cols[::-1].argmax()]
    return int((box & box[:, ::-1]).sum()) / active


def generate_blob(side: int, rng: np.random.Generator) -> np.ndarray:
    """One random distorted oval with interior holes, at least 4 pixels.

    The boundary is an ellipse (random center in the inner half of the
    frame, semi-axes between 15% and 40% of the side, random rotation) whose
    radius is modulated by two to four low harmonics; holes are punched
    i.i.d. into interior pixels at a per-image rate.  Degenerate draws are
    retried on the same stream, so the result is a pure function of the
    generator state.
    """
    if side < 8:
        raise ValueError("blob images need side >= 8")
    for _ in range(64):
        img = _draw_blob(side, rng)
        if img.sum() >= 4:
            return img
    raise RuntimeError("blob generation kept producing degenerate images")


def _draw_blob(side: int, rng: np.random.Generator) -> np.ndarray:
    center = rng.uniform(0.25 * side, 0.75 * side, size=2)
    axes = rng.uniform(0.15 * side, 0.40 * side, size=2)
    theta = rng.uniform(0.0, np.pi)
    n_harmonics = int(rng.integers(2, 5))
    amplitudes = rng.uniform(0.0, 1.0, size=n_harmonics)
    total = rng.uniform(0.05, 0.25)
    amplitudes *= total / max(amplitudes.sum(), 1e-12)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_harmonics)
    hole_rate = rng.uniform(0.0, 0.35)

    r, c = np.meshgrid(np.arange(side) + 0.5, np.arange(side) + 0.5, indexing="ij")
    dy, dx = r - center[0], c - center[1]
    ct, st = np.cos(theta), np.sin(theta)
    u = (ct * dx + st * dy) / axes[0]
    v = (-st * dx + ct * dy) / axes[1]
    rho = np.sqrt(u**2 + v**2)
    ang = np.arctan2(v, u)
    boundary = np.ones_like(ang)
    for h, (amp, phase) in enumerate(zip(amplitudes, phases), start=2):
        boundary += amp * np.cos(h * ang + phase)
    blob = rho <= boundary

    interior = blob.copy()
    interior[1:, :] &= blob[:-1, :]
    interior[:-1, :] &= blob[1:, :]
    interior[:, 1:] &= blob[:, :-1]
    interior[:, :-1] &= blob[:, 1:]
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    holes = interior & (rng.uniform(size=blob.shape) < hole_rate)
    return (blob & ~holes).astype(np.uint8)


@dataclass
class LabeledDataset:
    """Generated images with scores, per-score 40/20/40 labels and a split."""

    side: int
    images: list[np.ndarray]
    closedness: np.ndarray
    symmetry: np.ndarray
    closed_label: list[str]
    sym_label: list[str]
    split: list[str]

    def __len__(self) -> int:
        return len(self.images)

    def task_labels(self, task: str) -> list[str]:
        if task == "closedness":
            return self.closed_label
        if task == "symmetry":
            return self.sym_label
        raise ValueError(f"unknown task {task!r}")


def assign_labels(scores: np.ndarray) -> list[str]:
    """Top 40% high, bottom 40% low, middle fifth excluded.

    Ties are broken by ascending image id, so the labeling is deterministic
    even on constant scores.
    """
    count = len(scores)
    k = int(0.4 * count)
    order = np.lexsort((np.arange(count), scores))
    labels = ["excluded"] * count
    for idx in order[:k]:
        labels[int(idx)] = "low"
    for idx in order[count - k :]:
        labels[int(idx)] = "high"
    return labels


def build_dataset(count: int, side: int, seed: int) -> LabeledDataset:
    """Generate, score, label and split ``count`` blob images.

    Image ``i`` is drawn from its own generator seeded by ``(seed, i)``, so
    generation parallelizes without affecting the output.  The split column
    marks the leading five sixths of the ids as train data; task-specific
    train/test sets are the labeled images inside each split.
    """
    if count < 10:
        raise ValueError("need at least 10 images for a 40/20/40 labeling")

    def one(i: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, i)))
        return generate_blob(side, rng)

    images = map_parallel(one, range(count))
    closed = np.array([closedness(img) for img in images])
    sym = np.array([symmetry(img) for img in images])
    n_train = int(count * TRAIN_FRACTION)
    split = ["train" if i < n_train else "test" for i in range(count)]
    return LabeledDataset(
        side=side,
        images=images,
        closedness=closed,
        symmetry=sym,
        closed_label=assign_labels(closed),
        sym_label=assign_labels(sym),
        split=split,
    )


def write_dataset(ds: LabeledDataset, directory) -> None:
    """Store one PBM per image plus a manifest.csv with scores and labels."""
    directory = Path(directory)
    (directory / "images").mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(ds.images):
        write_pbm(directory / "images" / f"{i:06d}.pbm", img)
    tmp = directory / "manifest.csv.tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "closedness", "symmetry", "closed_label", "sym_label", "split"])
        for i in range(len(ds)):
            writer.writerow(
                [
                    i,
                    repr(float(ds.closedness[i])),
                    repr(float(ds.symmetry[i])),
                    ds.closed_label[i],
                    ds.sym_label[i],
                    ds.split[i],
                ]
            )
    tmp.replace(directory / "manifest.csv")


def read_dataset(directory) -> LabeledDataset:
    """Load a dataset directory, checking manifest and files agree."""
    directory = Path(directory)
    manifest = directory / "manifest.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"{manifest} is missing")
    rows = []
    with open(manifest, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    ids = [int(r["id"]) for r in rows]
    if ids != list(range(len(rows))):
        raise ValueError("manifest ids must be 0..count-1 in order")
    images = []
    for i in ids:
        path = directory / "images" / f"{i:06d}.pbm"
        if not path.exists():
            raise FileNotFoundError(f"image file {path} listed in manifest is missing")
        images.append(read_pbm(path))
    extra = set(p.name for p in (directory / "images").glob("*.pbm")) - {
        f"{i:06d}.pbm" for i in ids
    }
    if extra:
        raise ValueError(f"image files not listed in manifest: {sorted(extra)[:3]}")
    sides = {img.shape for img in images}
    if len(sides) > 1 or (images and images[0].shape[0] != images[0].shape[1]):
        raise ValueError("dataset images must share one square shape")
    for r in rows:
        if r["closed_label"] not in LABELS or r["sym_label"] not in LABELS or r["split"] not in SPLITS:
            raise ValueError(f"manifest row {r['id']} carries an unknown label")
    return LabeledDataset(
        side=images[0].shape[0] if images else 0,
        images=images,
        closedness=np.array([float(r["closedness"]) for r in rows]),
        symmetry=np.array([float(r["symmetry"]) for r in rows]),
        closed_label=[r["closed_label"] for r in rows],
        sym_label=[r["sym_label"] for r in rows],
        split=[r["split"] for r in rows],
    )
