"""Small feed-forward networks with exact backprop and momentum SGD.

Everything is float64 and deterministic for a given seed. Gradients are
exact (no autograd graph, just the chain rule over the layer stack) and
include the input gradient, which the deterministic actor update needs.

The numeric kernels live in lanerl._backend (compiled when available).
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from lanerl import _backend
from lanerl._purepy import ACT_LINEAR, ACT_RELU, ACT_SIGMOID, ACT_TANH

ACTIVATIONS = {
    "linear": ACT_LINEAR,
    "relu": ACT_RELU,
    "tanh": ACT_TANH,
    "sigmoid": ACT_SIGMOID,
}
_ACT_NAMES = {code: name for name, code in ACTIVATIONS.items()}

_MAGIC = b"LMLP"
_FORMAT_VERSION = 1


class InvalidArchitectureError(ValueError):
    """Layer sizes or activation list do not describe a valid network."""


class ShapeError(ValueError):
    """Array dimensions do not match the network they are used with."""


class CacheMismatchError(RuntimeError):
    """ForwardCache used with parameters other than the ones that built it."""


class TrainingDivergenceError(RuntimeError):
    """Non-finite gradients; the optimizer step was rejected."""


@dataclass
class MlpParams:
    """Weights (out, in), biases (out,) and activation name per layer.

    ``version`` counts optimizer steps so that stale ForwardCaches can be
    detected instead of silently producing wrong gradients.
    """

    weights: list
    biases: list
    activations: tuple
    version: int = 0

    @property
    def layer_sizes(self):
        sizes = [self.weights[0].shape[1]]
        sizes.extend(w.shape[0] for w in self.weights)
        return sizes

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def act_codes(self):
        return [ACTIVATIONS[a] for a in self.activations]

    def copy(self):
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activations=tuple(self.activations),
        )

    def copy_from(self, other):
        """In-place copy of another net's values (target-network sync)."""
        if other.layer_sizes != self.layer_sizes:
            raise ShapeError("copy_from: architectures differ")
        for dst, src in zip(self.weights, other.weights):
            dst[...] = src
        for dst, src in zip(self.biases, other.biases):
            dst[...] = src
        self.version += 1


@dataclass
class ForwardCache:
    """Intermediates from one forward() call, consumed by backward()."""

    x: np.ndarray
    pres: list
    posts: list
    batched: bool
    params_id: int
    params_version: int


@dataclass
class GradientSet:
    """Per-layer weight/bias gradients plus the gradient w.r.t. the input."""

    weights: list
    biases: list
    input_grad: np.ndarray

    def scaled(self, factor):
        return GradientSet(
            weights=[w * factor for w in self.weights],
            biases=[b * factor for b in self.biases],
            input_grad=self.input_grad * factor,
        )


@dataclass
class SgdConfig:
    learning_rate: float
    momentum: float = 0.9
    clip_norm: float = 10.0  # None or 0 disables clipping

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


@dataclass
class SgdState:
    velocities: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params):
        vel = [np.zeros_like(w) for w in params.weights]
        vel += [np.zeros_like(b) for b in params.biases]
        return cls(velocities=vel)


def init_mlp(layer_sizes, activations=None, seed=0):
    """Glorot-uniform weights, zero biases, deterministic per seed.

    activations defaults to tanh on hidden layers and linear output.
    """
    if len(layer_sizes) < 2:
        raise InvalidArchitectureError(
            f"need at least input and output sizes, got {list(layer_sizes)}"
        )
    if any(int(n) <= 0 or int(n) != n for n in layer_sizes):
        raise InvalidArchitectureError(f"layer sizes must be positive ints: {list(layer_sizes)}")
    n_layers = len(layer_sizes) - 1
    if activations is None:
        activations = ["tanh"] * (n_layers - 1) + ["linear"]
    if len(activations) != n_layers:
        raise InvalidArchitectureError(
            f"expected {n_layers} activations, got {len(activations)}"
        )
    for a in activations:
        if a not in ACTIVATIONS:
            raise InvalidArchitectureError(f"unknown activation {a!r}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases, activations=tuple(activations))


def _as_batch(x, in_dim, what):
    arr = np.asarray(x, dtype=np.float64, order="C")
    if arr.ndim == 1:
        batched = False
        arr = arr.reshape(1, -1)
    elif arr.ndim == 2:
        batched = True
    else:
        raise ShapeError(f"{what} must be 1-d or 2-d, got ndim={arr.ndim}")
    if arr.shape[1] != in_dim:
        raise ShapeError(f"{what} has dim {arr.shape[1]}, network expects {in_dim}")
    return arr, batched


def forward(params, x):
    """Run the network on a vector or a (batch, in_dim) array.

    Returns (output, cache). Output matches the input's rank.
    """
    arr, batched = _as_batch(x, params.weights[0].shape[1], "input")
    # sum() is NaN/Inf-poisoned, so one reduction replaces a full isfinite
    # scan; a finite sum that overflows would diverge immediately anyway
    if not math.isfinite(float(arr.sum())):
        raise ValueError("non-finite network input")
    pres, posts = _backend.kernels.forward_pass(
        params.weights, params.biases, params.act_codes, arr
    )
    cache = ForwardCache(
        x=arr,
        pres=pres,
        posts=posts,
        batched=batched,
        params_id=id(params),
        params_version=params.version,
    )
    out = posts[-1]
    return (out if batched else out[0]), cache


def backward(params, cache, output_grad):
    """Gradients of sum(output * output_grad) w.r.t. weights, biases, input.

    Weight/bias gradients are summed over the batch; the input gradient is
    per sample. The cache must come from forward() on these exact params
    with no optimizer step in between.
    """
    if cache.params_id != id(params) or cache.params_version != params.version:
        raise CacheMismatchError("cache does not belong to these parameters")
    g, batched = _as_batch(output_grad, params.weights[-1].shape[0], "output_grad")
    if batched != cache.batched or g.shape[0] != cache.x.shape[0]:
        raise ShapeError("output_grad batch does not match the cached forward pass")
    dws, dbs, dx = _backend.kernels.backward_pass(
        params.weights, params.act_codes, cache.x, cache.pres, cache.posts, g
    )
    return GradientSet(
        weights=dws, biases=dbs, input_grad=dx if cache.batched else dx[0]
    )


def sgd_step(params, grads, cfg, state):
    """One in-place momentum-SGD step; returns the pre-clip gradient norm.

    Gradients are rescaled to global L2 norm <= cfg.clip_norm first. A
    non-finite gradient norm rejects the whole step.
    """
    if len(grads.weights) != params.n_layers:
        raise ShapeError("gradient layer count does not match params")
    for w, gw in zip(params.weights, grads.weights):
        if w.shape != gw.shape:
            raise ShapeError(f"weight grad shape {gw.shape} != {w.shape}")
    for b, gb in zip(params.biases, grads.biases):
        if b.shape != gb.shape:
            raise ShapeError(f"bias grad shape {gb.shape} != {b.shape}")
    flat_params = list(params.weights) + list(params.biases)
    flat_grads = [np.ascontiguousarray(g) for g in grads.weights + grads.biases]
    clip = cfg.clip_norm if cfg.clip_norm else 0.0
    norm = _backend.kernels.sgd_update(
        flat_params, flat_grads, state.velocities, cfg.learning_rate, cfg.momentum, clip
    )
    if not np.isfinite(norm):
        raise TrainingDivergenceError(f"non-finite gradient norm {norm}")
    params.version += 1
    return norm


def dumps_mlp(params):
    """Serialize to bytes; loads_mlp(dumps_mlp(p)) round-trips bitwise.

    Layout: b"LMLP", u32 format version, u32 n_layers, then per layer
    (u32 in, u32 out, u8 activation code), then per layer the raw
    little-endian float64 row-major weight matrix followed by the bias.
    """
    chunks = [_MAGIC, struct.pack("<II", _FORMAT_VERSION, params.n_layers)]
    for w, code in zip(params.weights, params.act_codes):
        chunks.append(struct.pack("<IIB", w.shape[1], w.shape[0], code))
    for w, b in zip(params.weights, params.biases):
        chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(chunks)


def save_mlp(params, path):
    """Write the dumps_mlp layout to a file; returns the byte count."""
    data = dumps_mlp(params)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_mlp(path):
    with open(path, "rb") as fh:
        data = fh.read()
    params, used = loads_mlp(data)
    if used != len(data):
        raise ValueError(f"trailing bytes in checkpoint {path}")
    return params


def loads_mlp(data, offset=0):
    """Parse one serialized net from bytes; returns (params, end_offset)."""
    if data[offset : offset + 4] != _MAGIC:
        raise ValueError("not an MLP checkpoint (bad magic)")
    offset += 4
    version, n_layers = struct.unpack_from("<II", data, offset)
    offset += 8
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    shapes = []
    for _ in range(n_layers):
        fan_in, fan_out, code = struct.unpack_from("<IIB", data, offset)
        offset += 9
        if code not in _ACT_NAMES:
            raise ValueError(f"unknown activation code {code}")
        shapes.append((fan_in, fan_out, code))
    weights = []
    biases = []
    acts = []
    for fan_in, fan_out, code in shapes:
        n = fan_out * fan_in
        w = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(fan_out, fan_in)
        offset += n * 8
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=offset)
        offset += fan_out * 8
        weights.append(w.astype(np.float64))  # frombuffer views are read-only
        biases.append(b.astype(np.float64))
        acts.append(_ACT_NAMES[code])
    return MlpParams(weights=weights, biases=biases, activations=tuple(acts)), offset
