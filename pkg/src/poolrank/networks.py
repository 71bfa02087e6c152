"""Forward and reverse passes for the four trainable architectures.

All models share the same skeleton: a fixed two-channel binary
representation (identity and negation of each pixel), a stack of 1x1
channel mixes interleaved with size-4 pooling windows laid out by a pooling
geometry, and a dense readout with two outputs.  Arithmetic-circuit models
(``deep_cac``, ``shallow_cac``) use product pooling and run in sign-aware
log space; rectifier models (``deep_relu_max``, ``deep_relu_avg``) apply
ReLU after every mix and pool with max or mean in direct space.

The training objective is the softmax cross-entropy over the decision
scores returned by :func:`forward`: direct activations for rectifier
models, output log-magnitudes (activation strength) for circuit models,
whose direct values over- or underflow float64 already at moderate image
sides.  Gradients are accumulated by a hand-written reverse traversal of
each forward graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import signed_log as sl
from .geometry import build_geometry

ARCHITECTURES = ("deep_cac", "shallow_cac", "deep_relu_max", "deep_relu_avg")
GEOMETRY_CHOICES = ("square", "mirror")
M_REP = 2  # fixed binary representation: (pixel, 1 - pixel)
INIT_STD = 0.1


@dataclass(frozen=True)
class ModelConfig:
    """Trainable model: architecture, pooling geometry, image side, width."""

    arch: str
    geometry: str = "square"
    side: int = 16
    channels: int = 16
    outputs: int = 2

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.geometry not in GEOMETRY_CHOICES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.side < 2 or self.side & (self.side - 1):
            raise ValueError("image side must be a power of two >= 2")
        if self.channels < 1 or self.outputs < 2:
            raise ValueError("need at least one channel and two outputs")

    @property
    def n_patches(self) -> int:
        return self.side**2

    @property
    def is_circuit(self) -> bool:
        return self.arch in ("deep_cac", "shallow_cac")

    @property
    def is_deep(self) -> bool:
        return self.arch != "shallow_cac"

    @property
    def levels(self) -> int:
        return round(math.log(self.n_patches, 4)) if self.is_deep else 1

    def to_json(self) -> dict:
        return {
            "arch": self.arch,
            "geometry": self.geometry,
            "side": self.side,
            "channels": self.channels,
            "outputs": self.outputs,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ModelConfig":
        return cls(
            arch=doc["arch"],
            geometry=doc.get("geometry", "square"),
            side=int(doc["side"]),
            channels=int(doc["channels"]),
            outputs=int(doc.get("outputs", 2)),
        )


def patch_permutation(cfg: ModelConfig) -> np.ndarray:
    """Flat pixel offset of every patch index, per the pooling geometry."""
    ordering = build_geometry(cfg.geometry, cfg.side).ordering
    perm = np.zeros(cfg.n_patches, dtype=np.int64)
    for r in range(cfg.side):
        for c in range(cfg.side):
            perm[ordering.index_of[r, c] - 1] = r * cfg.side + c
    return perm


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    w = cfg.channels
    shapes: dict[str, tuple[int, ...]] = {"conv0_w": (w, M_REP)}
    if not cfg.is_circuit:
        shapes["conv0_b"] = (w,)
    for l in range(1, cfg.levels):
        shapes[f"conv{l}_w"] = (w, w)
        if not cfg.is_circuit:
            shapes[f"conv{l}_b"] = (w,)
    shapes["out_w"] = (cfg.outputs, w)
    if not cfg.is_circuit:
        shapes["out_b"] = (cfg.outputs,)
    return shapes


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Seeded Gaussian weights, zero biases for rectifier models.

    Circuit models use std 0.1 (their log-space pass is scale-tolerant).
    Rectifier weights are scaled by fan-in; a flat 0.1 attenuates the
    activations roughly 0.4x per mix, which starves the gradients long
    before the desk-scale iteration budget runs out.
    """
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape)
        elif cfg.is_circuit:
            params[name] = INIT_STD * rng.standard_normal(shape)
        else:
            params[name] = math.sqrt(2.0 / shape[-1]) * rng.standard_normal(shape)
    return params


def check_binary_batch(cfg: ModelConfig, images: np.ndarray) -> np.ndarray:
    x = np.asarray(images)
    if x.ndim == 2:
        x = x[None]
    if x.shape[1:] != (cfg.side, cfg.side):
        raise ValueError(f"expected images of shape ({cfg.side}, {cfg.side}), got {x.shape[1:]}")
    if not np.isin(x, (0, 1)).all():
        raise ValueError("the fixed representation accepts binary pixels only")
    return x.astype(np.float64)


def _representation(cfg: ModelConfig, images: np.ndarray, perm: np.ndarray) -> np.ndarray:
    x = check_binary_batch(cfg, images)
    flat = x.reshape(x.shape[0], -1)[:, perm]
    return np.stack([flat, 1.0 - flat], axis=-1)  # (B, N, 2)


def _circuit_forward(cfg: ModelConfig, params, images, perm) -> tuple[np.ndarray, np.ndarray, list]:
    rep = _representation(cfg, images, perm)
    sign, logmag = sl.from_values(rep)
    cache = []
    n_layers = cfg.levels
    for l in range(n_layers):
        w = params[f"conv{l}_w"] if l else params["conv0_w"]
        sign, logmag, (u, y) = sl.linear(sign, logmag, w)
        window = 4 if cfg.is_deep else cfg.n_patches
        cache.append((u, y))
        sign, logmag = sl.product_pool(sign, logmag, window)
    s_out, m_out, (u_out, y_out) = sl.linear(sign[:, 0, :], logmag[:, 0, :], params["out_w"])
    cache.append((u_out, y_out))
    return s_out, m_out, cache


def _circuit_backward(cfg: ModelConfig, params, cache, adj_logits) -> dict[str, np.ndarray]:
    grads: dict[str, np.ndarray] = {}
    u_out, y_out = cache[-1]
    grads["out_w"], adj = sl.linear_backward(adj_logits, u_out, y_out, params["out_w"])
    adj = adj[:, None, :]  # adjoint of the last pooled log-magnitudes
    for l in range(cfg.levels - 1, -1, -1):
        u, y = cache[l]
        window = 4 if cfg.is_deep else cfg.n_patches
        adj = np.repeat(adj, window, axis=1)  # product pool: log adjoint fans out
        name = f"conv{l}_w" if l else "conv0_w"
        grads[name], adj = sl.linear_backward(adj, u, y, params[name])
    return grads


def _relu_forward(cfg: ModelConfig, params, images, perm) -> tuple[np.ndarray, list]:
    rep = _representation(cfg, images, perm)
    h = rep
    cache = []
    for l in range(cfg.levels):
        w = params[f"conv{l}_w"] if l else params["conv0_w"]
        b = params[f"conv{l}_b"] if l else params["conv0_b"]
        pre = h @ w.T + b
        act = np.maximum(pre, 0.0)
        bsz, p, c = act.shape
        grouped = act.reshape(bsz, p // 4, 4, c)
        if cfg.arch == "deep_relu_max":
            arg = grouped.argmax(axis=2)
            pooled = np.take_along_axis(grouped, arg[:, :, None, :], axis=2)[:, :, 0, :]
        else:
            arg = None
            pooled = grouped.mean(axis=2)
        cache.append((h, pre, arg))
        h = pooled
    z = h[:, 0, :] @ params["out_w"].T + params["out_b"]
    cache.append(h[:, 0, :])
    return z, cache


def _relu_backward(cfg: ModelConfig, params, cache, dz) -> dict[str, np.ndarray]:
    grads: dict[str, np.ndarray] = {}
    h_last = cache[-1]
    grads["out_w"] = dz.T @ h_last
    grads["out_b"] = dz.sum(axis=0)
    adj = (dz @ params["out_w"])[:, None, :]
    for l in range(cfg.levels - 1, -1, -1):
        h_in, pre, arg = cache[l]
        bsz, p, c = pre.shape
        if cfg.arch == "deep_relu_max":
            scattered = np.zeros((bsz, p // 4, 4, c))
            np.put_along_axis(scattered, arg[:, :, None, :], adj[:, :, None, :], axis=2)
            adj_act = scattered.reshape(bsz, p, c)
        else:
            adj_act = np.repeat(adj / 4.0, 4, axis=1)
        adj_pre = adj_act * (pre > 0.0)
        name = f"conv{l}_w" if l else "conv0_w"
        grads[name] = np.tensordot(adj_pre, h_in, axes=([0, 1], [0, 1]))
        grads[name.replace("_w", "_b")] = adj_pre.sum(axis=(0, 1))
        adj = adj_pre @ (params[name])
    return grads


def forward(cfg: ModelConfig, params, images, perm: np.ndarray | None = None) -> np.ndarray:
    """Decision scores, one per output: activations for rectifier models,
    log-magnitudes for circuit models (-inf marks an exact zero output)."""
    if perm is None:
        perm = patch_permutation(cfg)
    if cfg.is_circuit:
        _, logmag, _ = _circuit_forward(cfg, params, images, perm)
        return logmag
    z, _ = _relu_forward(cfg, params, images, perm)
    return z


def forward_signed(cfg: ModelConfig, params, images, perm: np.ndarray | None = None):
    """Exact output values in signed-log form (sign array, log-magnitude array)."""
    if perm is None:
        perm = patch_permutation(cfg)
    if cfg.is_circuit:
        sign, logmag, _ = _circuit_forward(cfg, params, images, perm)
        return sign, logmag
    z, _ = _relu_forward(cfg, params, images, perm)
    return sl.from_values(z)


def direct_forward(cfg: ModelConfig, params, images, perm: np.ndarray | None = None) -> np.ndarray:
    """Direct-space recomputation of circuit outputs with plain products.

    Only feasible while magnitudes stay inside float range (small sides);
    serves as the independent second route for checking the log-space pass.
    """
    if not cfg.is_circuit:
        raise ValueError("direct recomputation applies to circuit models")
    if perm is None:
        perm = patch_permutation(cfg)
    h = _representation(cfg, images, perm)
    for l in range(cfg.levels):
        w = params[f"conv{l}_w"] if l else params["conv0_w"]
        h = h @ w.T
        bsz, p, c = h.shape
        window = 4 if cfg.is_deep else cfg.n_patches
        h = h.reshape(bsz, p // window, window, c).prod(axis=2)
    return h[:, 0, :] @ params["out_w"].T


def predict(cfg: ModelConfig, params, images, perm: np.ndarray | None = None) -> np.ndarray:
    """Class with the stronger activation; ties go to the lower index."""
    return np.argmax(forward(cfg, params, images, perm), axis=1)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    # Rows whose every score is -inf (all outputs exactly zero) fall back to
    # a uniform distribution rather than 0/0.
    peak = logits.max(axis=1, keepdims=True)
    finite = np.isfinite(peak)
    shifted = np.where(finite, logits - np.where(finite, peak, 0.0), 0.0)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(
    cfg: ModelConfig, params, images, labels, perm: np.ndarray | None = None
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its parameter gradients.

    Raises if the loss is non-finite, naming the first offending sample.
    """
    if perm is None:
        perm = patch_permutation(cfg)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty batch")
    if cfg.is_circuit:
        _, logits, cache = _circuit_forward(cfg, params, images, perm)
    else:
        logits, cache = _relu_forward(cfg, params, images, perm)
    bsz = logits.shape[0]
    p = _softmax_rows(logits)
    sample_loss = -np.log(np.clip(p[np.arange(bsz), labels], 1e-300, None))
    if not np.all(np.isfinite(sample_loss)):
        bad = int(np.argmax(~np.isfinite(sample_loss)))
        raise FloatingPointError(f"non-finite loss at batch sample {bad}")
    dlogits = p.copy()
    dlogits[np.arange(bsz), labels] -= 1.0
    dlogits /= bsz
    if cfg.is_circuit:
        grads = _circuit_backward(cfg, params, cache, dlogits)
    else:
        grads = _relu_backward(cfg, params, cache, dlogits)
    return float(sample_loss.mean()), grads
