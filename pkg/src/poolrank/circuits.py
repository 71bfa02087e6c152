"""Coefficient tensors of deep and shallow convolutional arithmetic circuits.

A circuit with N input patches, M representation channels, hidden widths
``r_0..r_{L-1}`` and Y outputs realizes, for every output y, an order-N
coefficient tensor with dimension M per mode.  The deep variant (pooling
windows of four, ``L = log4 N`` hidden layers) builds the tensor through a
quad-tree of repeated tensor products; the shallow variant (one hidden
layer, global pooling) is a plain sum of rank-1 terms.

Besides materializing the full tensor (only feasible for small M**N), this
module computes its matricization w.r.t. a partition directly, by running
the same recursion on matricized blocks: every level combines the four
child blocks of a node with a Kronecker product and mixes channels
linearly.  Blocks are memoized by the induced partition they carry, so
symmetric partitions collapse to a handful of distinct computations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import PoolingGeometry, induced_partition, permute_partition
from .tensor_ops import (
    DEFAULT_MAX_ELEMENTS,
    CapacityError,
    Partition,
    kronecker,
    matricize,
    tensor_product,
)

DEPTH_KINDS = ("deep", "shallow")


def _log4(n: int) -> int:
    l = round(math.log(n, 4))
    if 4**l != n:
        raise ValueError(f"{n} is not a power of 4")
    return l


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a circuit: patch count, channel widths and depth kind."""

    n_patches: int
    m_rep: int
    widths: tuple[int, ...]
    outputs: int = 1
    depth_kind: str = "deep"
    geometry: PoolingGeometry | None = None

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.depth_kind not in DEPTH_KINDS:
            raise ValueError(f"unknown depth kind {self.depth_kind!r}")
        if self.m_rep < 1 or self.outputs < 1 or any(w < 1 for w in self.widths):
            raise ValueError("channel counts must all be positive")
        if self.depth_kind == "deep":
            levels = _log4(self.n_patches)
            if len(self.widths) != levels:
                raise ValueError(
                    f"deep circuit on {self.n_patches} patches needs {levels} widths, "
                    f"got {len(self.widths)}"
                )
            if self.geometry is not None and self.geometry.n != self.n_patches:
                raise ValueError("geometry size does not match the patch count")
        else:
            if self.n_patches < 1:
                raise ValueError("patch count must be positive")
            if len(self.widths) != 1:
                raise ValueError("shallow circuits have a single hidden width")
            if self.geometry is not None:
                raise ValueError("shallow circuits take no pooling geometry")

    @property
    def levels(self) -> int:
        return _log4(self.n_patches) if self.depth_kind == "deep" else 1

    def to_json(self) -> dict:
        doc = {
            "n_patches": self.n_patches,
            "m_rep": self.m_rep,
            "widths": list(self.widths),
            "outputs": self.outputs,
            "depth_kind": self.depth_kind,
        }
        if self.geometry is not None:
            from .geometry import geometry_to_json

            doc["geometry"] = geometry_to_json(self.geometry)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "NetworkSpec":
        geometry = None
        if doc.get("geometry") is not None:
            from .geometry import geometry_from_json

            geometry = geometry_from_json(doc["geometry"])
        return cls(
            n_patches=int(doc["n_patches"]),
            m_rep=int(doc["m_rep"]),
            widths=tuple(int(w) for w in doc["widths"]),
            outputs=int(doc.get("outputs", 1)),
            depth_kind=doc.get("depth_kind", "deep"),
            geometry=geometry,
        )


@dataclass(frozen=True)
class WeightSetting:
    """Linear weights of a circuit.

    ``conv0[g]`` is the length-M filter of channel g in the first hidden
    layer, ``conv[l-1][g]`` the length-``r_{l-1}`` filter of channel g in
    hidden layer l, and ``out[y]`` the dense weight vector of output y.
    """

    conv0: np.ndarray
    conv: tuple[np.ndarray, ...]
    out: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "conv0", np.asarray(self.conv0, dtype=np.float64))
        object.__setattr__(
            self, "conv", tuple(np.asarray(w, dtype=np.float64) for w in self.conv)
        )
        object.__setattr__(self, "out", np.asarray(self.out, dtype=np.float64))

    def validate_for(self, spec: NetworkSpec) -> None:
        widths = spec.widths
        if self.conv0.shape != (widths[0], spec.m_rep):
            raise ValueError(f"conv0 must have shape {(widths[0], spec.m_rep)}")
        if len(self.conv) != len(widths) - 1:
            raise ValueError(f"expected {len(widths) - 1} hidden mixing layers")
        for l, w in enumerate(self.conv, start=1):
            if w.shape != (widths[l], widths[l - 1]):
                raise ValueError(f"hidden layer {l} must have shape {(widths[l], widths[l - 1])}")
        if self.out.shape != (spec.outputs, widths[-1]):
            raise ValueError(f"output weights must have shape {(spec.outputs, widths[-1])}")

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        named = [("conv0", self.conv0)]
        named += [(f"conv{l}", w) for l, w in enumerate(self.conv, start=1)]
        named.append(("out", self.out))
        return named


def random_weights(spec: NetworkSpec, seed: int, dist: str = "gaussian") -> WeightSetting:
    """Reproducible i.i.d. weight draw (standard normal or uniform on (-1, 1))."""
    rng = np.random.default_rng(seed)
    if dist == "gaussian":
        draw = rng.standard_normal
    elif dist == "uniform":
        draw = lambda shape: rng.uniform(-1.0, 1.0, size=shape)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    widths = spec.widths
    conv0 = draw((widths[0], spec.m_rep))
    conv = tuple(draw((widths[l], widths[l - 1])) for l in range(1, len(widths)))
    out = draw((spec.outputs, widths[-1]))
    w = WeightSetting(conv0, conv, out)
    w.validate_for(spec)
    return w


def canonical_weights(spec: NetworkSpec) -> WeightSetting:
    """Deterministic integer weights that drive the matricization rank of a
    deep circuit to ``min(r_0, M) ** s`` on any partition splitting s
    quadruples, with all nonzero singular values equal.

    First-layer filters are the leading standard basis vectors (zero once
    the basis is exhausted), the first mixing channel sums them with an
    all-ones filter, and every later layer just forwards its first channel.
    """
    if spec.depth_kind != "deep":
        raise ValueError("canonical weights are defined for deep circuits")
    widths = spec.widths
    r0, m = widths[0], spec.m_rep
    conv0 = np.zeros((r0, m))
    for g in range(min(r0, m)):
        conv0[g, g] = 1.0
    conv = []
    for l in range(1, len(widths)):
        w = np.zeros((widths[l], widths[l - 1]))
        if l == 1:
            w[0, :] = 1.0
        else:
            w[0, 0] = 1.0
        conv.append(w)
    if len(widths) == 1:
        # Single-level circuit: the output layer itself plays the summing role.
        out = np.ones((spec.outputs, widths[-1]))
    else:
        out = np.zeros((spec.outputs, widths[-1]))
        out[:, 0] = 1.0
    w = WeightSetting(conv0, tuple(conv), out)
    w.validate_for(spec)
    return w


def _quad_tensor_power(t: np.ndarray, max_elements: int) -> np.ndarray:
    sq = tensor_product(t, t, max_elements)
    return tensor_product(sq, sq, max_elements)


def realize_deep_tensor(
    spec: NetworkSpec,
    w: WeightSetting,
    y: int,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> np.ndarray:
    """Materialize the order-N coefficient tensor of output ``y`` (1-based).

    Feasible only while ``M ** N`` stays within the element limit; use
    :func:`matricized_deep` otherwise.
    """
    if spec.depth_kind != "deep":
        raise ValueError("spec is not a deep circuit")
    w.validate_for(spec)
    _check_output_index(spec, y)
    if spec.m_rep**spec.n_patches > max_elements:
        raise CapacityError(
            f"coefficient tensor would hold {spec.m_rep}**{spec.n_patches} elements"
        )
    levels = spec.levels
    blocks = [w.conv0[g] for g in range(spec.widths[0])]
    for l in range(1, levels):
        powers = [_quad_tensor_power(b, max_elements) for b in blocks]
        blocks = [
            sum(w.conv[l - 1][g, a] * powers[a] for a in range(spec.widths[l - 1]))
            for g in range(spec.widths[l])
        ]
    powers = [_quad_tensor_power(b, max_elements) for b in blocks]
    return sum(w.out[y - 1, a] * powers[a] for a in range(spec.widths[-1]))


def realize_shallow_tensor(
    spec: NetworkSpec,
    w: WeightSetting,
    y: int,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> np.ndarray:
    """Materialize the shallow circuit's coefficient tensor: a sum of
    N-fold tensor powers of the first-layer filters."""
    if spec.depth_kind != "shallow":
        raise ValueError("spec is not a shallow circuit")
    w.validate_for(spec)
    _check_output_index(spec, y)
    if spec.m_rep**spec.n_patches > max_elements:
        raise CapacityError(
            f"coefficient tensor would hold {spec.m_rep}**{spec.n_patches} elements"
        )
    total = np.zeros((spec.m_rep,) * spec.n_patches)
    for g in range(spec.widths[0]):
        total += w.out[y - 1, g] * _tensor_power(w.conv0[g], spec.n_patches, max_elements)
    return total


def _tensor_power(v: np.ndarray, n: int, max_elements: int) -> np.ndarray:
    result = None
    base = v
    k = n
    while k:
        if k & 1:
            result = base if result is None else tensor_product(result, base, max_elements)
        k >>= 1
        if k:
            base = tensor_product(base, base, max_elements)
    return result


def _kron_power_vector(v: np.ndarray, n: int) -> np.ndarray:
    """Column vector: n-fold Kronecker power of v (the empty power is [1])."""
    if n == 0:
        return np.ones((1, 1))
    flat = _tensor_power(v, n, max_elements=np.inf).reshape(-1, 1)
    return flat


def _check_output_index(spec: NetworkSpec, y: int) -> None:
    if not 1 <= y <= spec.outputs:
        raise ValueError(f"output index {y} outside 1..{spec.outputs}")


def _apply_geometry(spec: NetworkSpec, p: Partition) -> Partition:
    if spec.geometry is not None and not spec.geometry.is_canonical():
        return permute_partition(p, spec.geometry.canonical_order)
    return p


def matricized_deep(
    spec: NetworkSpec,
    w: WeightSetting,
    y: int,
    p: Partition,
    max_block_elements: int = DEFAULT_MAX_ELEMENTS,
) -> np.ndarray:
    """Matricization of the deep coefficient tensor w.r.t. ``p``, computed
    without materializing the tensor.

    The quad-tree recursion runs directly on matricized blocks, one stack of
    per-channel matrices for every distinct induced partition at each level.
    A non-canonical geometry is handled by relabelling the partition into
    quad-tree positions first.  Raises :class:`CapacityError` naming the
    offending node if any block would exceed the element limit.
    """
    if spec.depth_kind != "deep":
        raise ValueError("spec is not a deep circuit")
    w.validate_for(spec)
    _check_output_index(spec, y)
    if p.n != spec.n_patches:
        raise ValueError(f"partition covers {p.n} indexes, circuit has {spec.n_patches}")
    p = _apply_geometry(spec, p)
    levels = spec.levels
    m = spec.m_rep

    for l in range(levels + 1):
        for k in range(1, spec.n_patches // 4**l + 1):
            sub = induced_partition(p, l, k)
            size = m ** len(sub.i_set) * m ** len(sub.j_set)
            if size > max_block_elements:
                raise CapacityError(
                    f"block at level {l}, group {k} needs {size} elements "
                    f"(|I|={len(sub.i_set)}, |J|={len(sub.j_set)})"
                )

    def level0_block(sub: Partition) -> np.ndarray:
        stack = np.empty((spec.widths[0], m ** len(sub.i_set), m ** len(sub.j_set)))
        for g in range(spec.widths[0]):
            stack[g] = matricize(w.conv0[g], sub)
        return stack

    cache: dict[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray] = {
        key: level0_block(sub)
        for key, sub in _distinct_induced(p, 0, spec.n_patches)
    }

    for l in range(1, levels):
        mixing = w.conv[l - 1]
        nxt: dict[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray] = {}
        for key, sub in _distinct_induced(p, l, spec.n_patches):
            children = [
                cache[_partition_key(induced_partition(sub, l - 1, t))] for t in range(1, 5)
            ]
            nxt[key] = _mix_quads(children, mixing)
        cache = nxt

    children = [
        cache[_partition_key(induced_partition(p, levels - 1, t))] for t in range(1, 5)
    ]
    return _mix_quads(children, w.out[y - 1 : y])[0]


def _partition_key(p: Partition) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return (p.i_set, p.j_set)


def _distinct_induced(p: Partition, level: int, n: int):
    seen: dict[tuple[tuple[int, ...], tuple[int, ...]], Partition] = {}
    for k in range(1, n // 4**level + 1):
        sub = induced_partition(p, level, k)
        seen.setdefault(_partition_key(sub), sub)
    return seen.items()


def _mix_quads(children: list[np.ndarray], mixing: np.ndarray) -> np.ndarray:
    """Channel mix of the Kronecker product of four child block stacks.

    Accumulates one input channel at a time so only a single Kronecker
    block is alive besides the output (the top-level block can be large).
    """
    width_in = children[0].shape[0]
    width_out = mixing.shape[0]
    rows = children[0].shape[1] * children[1].shape[1] * children[2].shape[1] * children[3].shape[1]
    cols = children[0].shape[2] * children[1].shape[2] * children[2].shape[2] * children[3].shape[2]
    out = np.zeros((width_out, rows, cols))
    for a in range(width_in):
        k = np.kron(np.kron(children[0][a], children[1][a]), np.kron(children[2][a], children[3][a]))
        for g in range(width_out):
            if mixing[g, a] != 0.0:
                out[g] += mixing[g, a] * k
    return out


def matricized_shallow(
    spec: NetworkSpec,
    w: WeightSetting,
    y: int,
    p: Partition,
    max_block_elements: int = DEFAULT_MAX_ELEMENTS,
) -> np.ndarray:
    """Matricization of the shallow coefficient tensor w.r.t. ``p``.

    Equals a weighted sum of outer products of Kronecker powers of the
    first-layer filters, so it depends on ``p`` only through the side sizes.
    """
    if spec.depth_kind != "shallow":
        raise ValueError("spec is not a shallow circuit")
    w.validate_for(spec)
    _check_output_index(spec, y)
    if p.n != spec.n_patches:
        raise ValueError(f"partition covers {p.n} indexes, circuit has {spec.n_patches}")
    m = spec.m_rep
    n_i, n_j = len(p.i_set), len(p.j_set)
    if m**n_i > max_block_elements or m**n_j > max_block_elements:
        raise CapacityError(f"matricization sides {m}**{n_i} x {m}**{n_j} exceed the limit")
    if m**n_i * m**n_j > max_block_elements:
        raise CapacityError(f"matricization needs {m ** p.n} elements, over the limit")
    u = np.hstack([_kron_power_vector(w.conv0[g], n_i) for g in range(spec.widths[0])])
    v = np.hstack([_kron_power_vector(w.conv0[g], n_j) for g in range(spec.widths[0])])
    return (u * w.out[y - 1]) @ v.T


def save_weights(path, spec: NetworkSpec, w: WeightSetting) -> None:
    """Store weights as a JSON header line plus little-endian float64 data."""
    w.validate_for(spec)
    named = w.arrays()
    header = {
        "spec": spec.to_json(),
        "arrays": [{"name": name, "shape": list(a.shape)} for name, a in named],
        "dtype": "<f8",
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for _, a in named:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    tmp.replace(path)


def load_weights(path) -> tuple[NetworkSpec, WeightSetting]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("dtype") != "<f8":
            raise ValueError("unsupported weight dtype")
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"truncated weight file while reading {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise ValueError("trailing bytes after declared arrays")
    spec = NetworkSpec.from_json(header["spec"])
    conv = tuple(arrays[f"conv{l}"] for l in range(1, len(spec.widths)))
    w = WeightSetting(arrays["conv0"], conv, arrays["out"])
    w.validate_for(spec)
    return spec, w


def weights_to_json(w: WeightSetting) -> dict:
    return {name: a.tolist() for name, a in w.arrays()}


def weights_from_json(spec: NetworkSpec, doc: dict) -> WeightSetting:
    conv = tuple(doc[f"conv{l}"] for l in range(1, len(spec.widths)))
    w = WeightSetting(doc["conv0"], conv, doc["out"])
    w.validate_for(spec)
    return w
