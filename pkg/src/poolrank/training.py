"""Training loops for the blob tasks: Adam, schedules, curves, checkpoints.

Arithmetic-circuit models train with step size 0.003 and both moment decay
rates at 0.9, no weight decay; rectifier models use 0.001 with decays
0.9/0.999 and weight decay 1e-4 applied as an additive gradient term.  The
step size drops by a factor of ten late in training.  Everything is seeded:
a fixed seed and data order reproduce parameter trajectories bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .blobs import LabeledDataset
from .networks import ModelConfig, forward, init_params, loss_and_grads, patch_permutation, predict

TASKS = ("closedness", "symmetry")
LABEL_TO_CLASS = {"low": 0, "high": 1}


@dataclass(frozen=True)
class TrainSchedule:
    """Iteration budget and data sizes for one training run."""

    iterations: int = 3000
    batch_size: int = 64
    lr_drop_step: int = 2400
    lr_drop_factor: float = 0.1
    eval_every: int = 500
    n_train: int = 5000
    n_test: int = 1000


def desk_schedule() -> TrainSchedule:
    return TrainSchedule()


def paper_schedule() -> TrainSchedule:
    return TrainSchedule(
        iterations=15000,
        batch_size=64,
        lr_drop_step=12000,
        eval_every=1000,
        n_train=20000,
        n_test=4000,
    )


@dataclass(frozen=True)
class AdamHyper:
    alpha: float
    beta1: float
    beta2: float
    eps: float = 1e-8
    weight_decay: float = 0.0


def adam_hyper_for(arch: str) -> AdamHyper:
    if arch in ("deep_cac", "shallow_cac"):
        return AdamHyper(alpha=0.003, beta1=0.9, beta2=0.9)
    return AdamHyper(alpha=0.001, beta1=0.9, beta2=0.999, weight_decay=1e-4)


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    hyper: AdamHyper
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def init(cls, params: dict[str, np.ndarray], hyper: AdamHyper) -> "AdamState":
        zeros = {k: np.zeros_like(p) for k, p in params.items()}
        return cls(hyper=hyper, m=zeros, v={k: np.zeros_like(p) for k, p in params.items()})


def adam_step(
    state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> tuple[AdamState, dict[str, np.ndarray]]:
    """One bias-corrected update; returns the advanced state and parameters."""
    h = state.hyper
    t = state.step + 1
    new_params = {}
    new_m = {}
    new_v = {}
    for key, p in params.items():
        g = grads[key]
        if h.weight_decay:
            g = g + h.weight_decay * p
        m = h.beta1 * state.m[key] + (1.0 - h.beta1) * g
        v = h.beta2 * state.v[key] + (1.0 - h.beta2) * g * g
        m_hat = m / (1.0 - h.beta1**t)
        v_hat = v / (1.0 - h.beta2**t)
        new_params[key] = p - h.alpha * m_hat / (np.sqrt(v_hat) + h.eps)
        new_m[key] = m
        new_v[key] = v
    return AdamState(hyper=h, m=new_m, v=new_v, step=t), new_params


@dataclass
class TrainResult:
    config: ModelConfig
    params: dict[str, np.ndarray]
    curves: list[dict]
    train_accuracy: float
    test_accuracy: float | None
    excluded_consumed: int = 0


def accuracy(cfg: ModelConfig, params, images, labels, perm=None, chunk: int = 512) -> float:
    """Fraction of correct stronger-activation predictions."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("no samples to evaluate")
    hits = 0
    for lo in range(0, len(labels), chunk):
        batch = images[lo : lo + chunk]
        hits += int((predict(cfg, params, batch, perm) == labels[lo : lo + chunk]).sum())
    return hits / len(labels)


def train_on_arrays(
    cfg: ModelConfig,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray | None,
    y_test: np.ndarray | None,
    schedule: TrainSchedule,
    seed: int,
    excluded_mask: np.ndarray | None = None,
) -> TrainResult:
    """Core loop over prepared arrays; batches are drawn i.i.d. per step.

    ``excluded_mask`` instruments label hygiene: the count of consumed
    samples flagged there is reported on the result (it must stay zero when
    the arrays were built by :func:`task_arrays`).
    """
    rng = np.random.default_rng(seed)
    params = init_params(cfg, rng)
    state = AdamState.init(params, adam_hyper_for(cfg.arch))
    perm = patch_permutation(cfg)
    curves: list[dict] = []
    excluded_consumed = 0
    n_train = len(x_train)
    running: list[float] = []

    def record(step: int):
        train_acc = accuracy(cfg, params, x_train, y_train, perm)
        test_acc = accuracy(cfg, params, x_test, y_test, perm) if x_test is not None else None
        curves.append(
            {
                "step": step,
                "loss": float(np.mean(running)) if running else math.nan,
                "train_acc": train_acc,
                "test_acc": test_acc,
            }
        )
        running.clear()

    for step in range(1, schedule.iterations + 1):
        if step == schedule.lr_drop_step + 1:
            state.hyper = replace(state.hyper, alpha=state.hyper.alpha * schedule.lr_drop_factor)
        idx = rng.integers(0, n_train, size=schedule.batch_size)
        if excluded_mask is not None:
            excluded_consumed += int(excluded_mask[idx].sum())
        loss, grads = loss_and_grads(cfg, params, x_train[idx], y_train[idx], perm)
        running.append(loss)
        state, params = adam_step(state, params, grads)
        if schedule.eval_every and step % schedule.eval_every == 0:
            record(step)
    if not curves or curves[-1]["step"] != schedule.iterations:
        record(schedule.iterations)
    return TrainResult(
        config=cfg,
        params=params,
        curves=curves,
        train_accuracy=curves[-1]["train_acc"],
        test_accuracy=curves[-1]["test_acc"],
        excluded_consumed=excluded_consumed,
    )


def task_arrays(
    ds: LabeledDataset, task: str, split: str, count: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Images and 0/1 classes of the labeled samples in one split.

    Excluded-label images never appear.  When ``count`` is given, the first
    that many ids are taken; too few labeled samples raise.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    labels = ds.task_labels(task)
    ids = [i for i in range(len(ds)) if labels[i] != "excluded" and ds.split[i] == split]
    if count is not None:
        if len(ids) < count:
            raise ValueError(
                f"split {split!r} holds {len(ids)} labeled {task} samples, need {count}"
            )
        ids = ids[:count]
    if not ids:
        raise ValueError(f"no labeled {task} samples in split {split!r}")
    x = np.stack([ds.images[i] for i in ids])
    y = np.array([LABEL_TO_CLASS[labels[i]] for i in ids], dtype=np.int64)
    return x, y


def train(cfg: ModelConfig, ds: LabeledDataset, schedule: TrainSchedule, seed: int, task: str) -> TrainResult:
    """Train on a labeled dataset's task split; excluded images never enter."""
    if ds.side != cfg.side:
        raise ValueError(f"dataset side {ds.side} does not match model side {cfg.side}")
    x_train, y_train = task_arrays(ds, task, "train", schedule.n_train)
    x_test, y_test = task_arrays(ds, task, "test", schedule.n_test)
    return train_on_arrays(
        cfg,
        x_train,
        y_train,
        x_test,
        y_test,
        schedule,
        seed,
        excluded_mask=np.zeros(len(x_train), dtype=bool),
    )


def evaluate(cfg: ModelConfig, params, ds: LabeledDataset, task: str) -> float:
    """Accuracy over the labeled test images of a task."""
    x_test, y_test = task_arrays(ds, task, "test")
    return accuracy(cfg, params, x_test, y_test)


def save_model(path, cfg: ModelConfig, params: dict[str, np.ndarray], step: int) -> None:
    """Checkpoint: one JSON header line, then little-endian float64 blocks."""
    names = sorted(params)
    header = {
        "config": cfg.to_json(),
        "step": step,
        "arrays": [{"name": n, "shape": list(params[n].shape)} for n in names],
        "dtype": "<f8",
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for n in names:
            fh.write(np.ascontiguousarray(params[n], dtype="<f8").tobytes())
    tmp.replace(path)


def load_model(path) -> tuple[ModelConfig, dict[str, np.ndarray], int]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        params = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"truncated checkpoint while reading {entry['name']}")
            params[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    cfg = ModelConfig.from_json(header["config"])
    return cfg, params, int(header["step"])


def write_curves(path, curves: list[dict]) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "train_acc", "test_acc"])
        for row in curves:
            test = "" if row["test_acc"] is None else repr(row["test_acc"])
            writer.writerow([row["step"], repr(row["loss"]), repr(row["train_acc"]), test])
    tmp.replace(path)
