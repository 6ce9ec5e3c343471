"""Feed-forward classifiers with client-conditioned gated hidden units.

A CGAU (conditional gated activation unit) layer computes, for an input row
x and a one-hot client code h selecting row v of the conditioning matrices:

    z = tanh(x @ W_f + b_f + V_f[client]) * sigmoid(x @ W_g + b_g + V_g[client])

The W/b blocks are shared across clients and averaged by the federation;
the V blocks are per-client and stay local. The baseline swaps each hidden
layer for a plain ReLU affine layer. Backpropagation is implemented by hand
and validated against central finite differences (see ``gradient_check``).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Union

import numpy as np

from .errors import DimensionError, LabelError, ParseError
from .seeding import make_rng

BINARY = "binary"
MULTICLASS = "multiclass"

CHECKPOINT_MAGIC = b"CGAU"
CHECKPOINT_VERSION = 1
_KIND_RELU = 0
_KIND_CGAU = 1
_TASK_TAGS = {BINARY: 0, MULTICLASS: 1}
_TAG_TASKS = {v: k for k, v in _TASK_TAGS.items()}


@dataclass
class ClientOneHot:
    """One-hot client code: entry ``client_id`` of a length-``k`` vector is 1."""

    client_id: int
    k: int

    def __post_init__(self):
        if not 0 <= self.client_id < self.k:
            raise DimensionError(
                f"client_id {self.client_id} outside [0, {self.k})"
            )


@dataclass
class CgauLayer:
    """Gated hidden layer with per-client conditioning rows.

    w_filter/w_gate are D x N, biases length N, v_filter/v_gate are K x N.
    """

    w_filter: np.ndarray
    w_gate: np.ndarray
    b_filter: np.ndarray
    b_gate: np.ndarray
    v_filter: np.ndarray
    v_gate: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.w_filter.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w_filter.shape[1]

    @property
    def num_clients(self) -> int:
        return self.v_filter.shape[0]

    def shared_arrays(self) -> list[np.ndarray]:
        return [self.w_filter, self.w_gate, self.b_filter, self.b_gate]

    def clone(self) -> "CgauLayer":
        return CgauLayer(*(a.copy() for a in (
            self.w_filter, self.w_gate, self.b_filter,
            self.b_gate, self.v_filter, self.v_gate,
        )))


@dataclass
class ReluLayer:
    """Plain affine + ReLU hidden layer (unconditioned baseline)."""

    weight: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def shared_arrays(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def clone(self) -> "ReluLayer":
        return ReluLayer(self.weight.copy(), self.bias.copy())


@dataclass
class OutputLayer:
    """Unconditioned affine map producing logits."""

    weight: np.ndarray
    bias: np.ndarray

    def shared_arrays(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def clone(self) -> "OutputLayer":
        return OutputLayer(self.weight.copy(), self.bias.copy())


HiddenLayer = Union[CgauLayer, ReluLayer]


@dataclass
class ClassifierModel:
    """Hidden layers (all CGAU or all ReLU) plus an affine output head."""

    hidden_layers: list
    output_layer: OutputLayer
    task: str
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.task not in (BINARY, MULTICLASS):
            raise DimensionError(f"unknown task {self.task!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DimensionError(
                f"dropout_rate must be in [0, 1), got {self.dropout_rate}"
            )
        kinds = {type(layer) for layer in self.hidden_layers}
        if len(kinds) > 1:
            raise DimensionError("hidden layers must all be the same kind")
        width = None
        for layer in self.hidden_layers:
            if width is not None and layer.in_dim != width:
                raise DimensionError(
                    f"layer input dim {layer.in_dim} does not chain from {width}"
                )
            width = layer.out_dim
        if width is not None and self.output_layer.weight.shape[0] != width:
            raise DimensionError("output layer does not chain from last hidden layer")

    @property
    def in_dim(self) -> int:
        if self.hidden_layers:
            return self.hidden_layers[0].in_dim
        return self.output_layer.weight.shape[0]

    @property
    def num_classes(self) -> int:
        out = self.output_layer.weight.shape[1]
        return 2 if self.task == BINARY else out

    @property
    def is_conditioned(self) -> bool:
        return any(isinstance(layer, CgauLayer) for layer in self.hidden_layers)

    @property
    def num_clients(self) -> int:
        for layer in self.hidden_layers:
            if isinstance(layer, CgauLayer):
                return layer.num_clients
        return 0

    def clone(self) -> "ClassifierModel":
        return ClassifierModel(
            [layer.clone() for layer in self.hidden_layers],
            self.output_layer.clone(),
            self.task,
            self.dropout_rate,
        )

    def shared_arrays(self) -> list[np.ndarray]:
        """Parameter blocks the federation averages, in a fixed order."""
        arrays: list[np.ndarray] = []
        for layer in self.hidden_layers:
            arrays.extend(layer.shared_arrays())
        arrays.extend(self.output_layer.shared_arrays())
        return arrays

    def conditioning_arrays(self) -> list[np.ndarray]:
        """Per-client blocks (v_filter, v_gate per CGAU layer), never averaged."""
        arrays: list[np.ndarray] = []
        for layer in self.hidden_layers:
            if isinstance(layer, CgauLayer):
                arrays.extend([layer.v_filter, layer.v_gate])
        return arrays

    def all_arrays(self) -> list[np.ndarray]:
        return self.shared_arrays() + self.conditioning_arrays()


def init_model(
    in_dim: int,
    hidden_dims: list[int],
    num_classes: int,
    unit: str,
    num_clients: int = 0,
    dropout_rate: float = 0.0,
    seed: int = 0,
) -> ClassifierModel:
    """Build a model with Glorot-uniform W and zero biases/conditioning.

    Zero V blocks make a fresh conditioned model exactly equal to its
    unconditioned gated counterpart. ``unit`` is "cgau" or "relu"; binary
    tasks (num_classes == 2) get a single output logit.
    """
    if unit not in ("cgau", "relu"):
        raise DimensionError(f"unknown unit kind {unit!r}")
    if unit == "cgau" and num_clients < 1:
        raise DimensionError("cgau units require num_clients >= 1")
    rng = make_rng(seed)

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    layers: list[HiddenLayer] = []
    width = in_dim
    for n in hidden_dims:
        if unit == "cgau":
            layers.append(CgauLayer(
                w_filter=glorot(width, n),
                w_gate=glorot(width, n),
                b_filter=np.zeros(n),
                b_gate=np.zeros(n),
                v_filter=np.zeros((num_clients, n)),
                v_gate=np.zeros((num_clients, n)),
            ))
        else:
            layers.append(ReluLayer(weight=glorot(width, n), bias=np.zeros(n)))
        width = n
    task = BINARY if num_classes == 2 else MULTICLASS
    out_width = 1 if task == BINARY else num_classes
    output = OutputLayer(weight=glorot(width, out_width), bias=np.zeros(out_width))
    return ClassifierModel(layers, output, task, dropout_rate)


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------

def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def cgau_forward(layer: CgauLayer, x: np.ndarray, h: ClientOneHot):
    """Gated forward pass for one client's batch; returns (z, cache)."""
    if x.shape[1] != layer.in_dim:
        raise DimensionError(
            f"input width {x.shape[1]} != layer input dim {layer.in_dim}"
        )
    if h.k != layer.num_clients:
        raise DimensionError(
            f"one-hot width {h.k} != layer client count {layer.num_clients}"
        )
    pre_f = x @ layer.w_filter + layer.b_filter + layer.v_filter[h.client_id]
    pre_g = x @ layer.w_gate + layer.b_gate + layer.v_gate[h.client_id]
    filt = np.tanh(pre_f)
    gate = _sigmoid(pre_g)
    return filt * gate, (x, filt, gate)


def cgau_backward(layer: CgauLayer, cache, grad_out: np.ndarray, h: ClientOneHot):
    """Gradients of the gated layer; conditioning grads land only in row h."""
    x, filt, gate = cache
    d_pre_f = grad_out * gate * (1.0 - filt * filt)
    d_pre_g = grad_out * filt * gate * (1.0 - gate)
    grads = CgauLayer(
        w_filter=x.T @ d_pre_f,
        w_gate=x.T @ d_pre_g,
        b_filter=d_pre_f.sum(axis=0),
        b_gate=d_pre_g.sum(axis=0),
        v_filter=np.zeros_like(layer.v_filter),
        v_gate=np.zeros_like(layer.v_gate),
    )
    grads.v_filter[h.client_id] = d_pre_f.sum(axis=0)
    grads.v_gate[h.client_id] = d_pre_g.sum(axis=0)
    grad_x = d_pre_f @ layer.w_filter.T + d_pre_g @ layer.w_gate.T
    return grads, grad_x


def relu_forward(layer: ReluLayer, x: np.ndarray):
    if x.shape[1] != layer.in_dim:
        raise DimensionError(
            f"input width {x.shape[1]} != layer input dim {layer.in_dim}"
        )
    pre = x @ layer.weight + layer.bias
    out = np.maximum(pre, 0.0)
    return out, (x, pre)


def relu_backward(layer: ReluLayer, cache, grad_out: np.ndarray):
    x, pre = cache
    d_pre = grad_out * (pre > 0.0)
    grads = ReluLayer(weight=x.T @ d_pre, bias=d_pre.sum(axis=0))
    return grads, d_pre @ layer.weight.T


def model_forward(
    model: ClassifierModel,
    x: np.ndarray,
    h: ClientOneHot | None = None,
    training: bool = False,
    rng: np.random.Generator | None = None,
):
    """Run the model on a batch from a single client; returns (logits, caches).

    Inverted dropout is applied after each hidden layer only when training;
    surviving activations are scaled by 1/(1-rate) so inference needs no
    rescaling. ``rng`` is required when dropout can fire.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"batch must be 2-D, got shape {x.shape}")
    if model.is_conditioned and h is None:
        raise DimensionError("conditioned model requires a client one-hot")
    use_dropout = training and model.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise DimensionError("training with dropout requires an rng")
    caches = []
    out = x
    for layer in model.hidden_layers:
        if isinstance(layer, CgauLayer):
            out, cache = cgau_forward(layer, out, h)
        else:
            out, cache = relu_forward(layer, out)
        mask = None
        if use_dropout:
            keep = 1.0 - model.dropout_rate
            mask = (rng.random(out.shape) < keep) / keep
            out = out * mask
        caches.append((cache, mask))
    if out.shape[1] != model.output_layer.weight.shape[0]:
        raise DimensionError(
            f"width {out.shape[1]} does not match output layer "
            f"input {model.output_layer.weight.shape[0]}"
        )
    logits = out @ model.output_layer.weight + model.output_layer.bias
    caches.append((out,))
    return logits, caches


def _log_sigmoid(a: np.ndarray) -> np.ndarray:
    return np.minimum(a, 0.0) - np.log1p(np.exp(-np.abs(a)))


def loss_from_logits(logits: np.ndarray, y: np.ndarray, task: str) -> float:
    """Mean cross-entropy of a batch (sigmoid+BCE binary, softmax+CE multiclass)."""
    y = np.asarray(y)
    if task == BINARY:
        if logits.shape[1] != 1:
            raise DimensionError("binary task expects a single logit column")
        if np.any((y != 0) & (y != 1)):
            raise LabelError("binary labels must be 0 or 1")
        z = logits[:, 0]
        losses = -(y * _log_sigmoid(z) + (1 - y) * _log_sigmoid(-z))
        return float(losses.mean())
    num_classes = logits.shape[1]
    if np.any(y < 0) or np.any(y >= num_classes):
        raise LabelError(f"labels must lie in [0, {num_classes})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    losses = log_norm - shifted[np.arange(len(y)), y]
    return float(losses.mean())


def _loss_grad(logits: np.ndarray, y: np.ndarray, task: str) -> np.ndarray:
    batch = logits.shape[0]
    if task == BINARY:
        probs = _sigmoid(logits[:, 0])
        return ((probs - y) / batch)[:, None]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    probs[np.arange(batch), y] -= 1.0
    return probs / batch


@dataclass
class ModelGrads:
    """Gradient blocks mirroring the model's parameter structure."""

    hidden_layers: list
    output_layer: OutputLayer

    def shared_arrays(self) -> list[np.ndarray]:
        arrays: list[np.ndarray] = []
        for layer in self.hidden_layers:
            arrays.extend(layer.shared_arrays())
        arrays.extend(self.output_layer.shared_arrays())
        return arrays

    def conditioning_arrays(self) -> list[np.ndarray]:
        arrays: list[np.ndarray] = []
        for layer in self.hidden_layers:
            if isinstance(layer, CgauLayer):
                arrays.extend([layer.v_filter, layer.v_gate])
        return arrays

    def all_arrays(self) -> list[np.ndarray]:
        return self.shared_arrays() + self.conditioning_arrays()


def loss_and_gradients(
    model: ClassifierModel,
    x: np.ndarray,
    y: np.ndarray,
    h: ClientOneHot | None = None,
    training: bool = True,
    rng: np.random.Generator | None = None,
) -> tuple[float, ModelGrads]:
    """Mean cross-entropy plus gradients for every parameter block."""
    y = np.asarray(y)
    logits, caches = model_forward(model, x, h, training=training, rng=rng)
    loss = loss_from_logits(logits, y, model.task)
    grad = _loss_grad(logits, y, model.task)

    hidden_in = caches[-1][0]
    out_grads = OutputLayer(
        weight=hidden_in.T @ grad,
        bias=grad.sum(axis=0),
    )
    grad = grad @ model.output_layer.weight.T
    hidden_grads: list = [None] * len(model.hidden_layers)
    for idx in range(len(model.hidden_layers) - 1, -1, -1):
        layer = model.hidden_layers[idx]
        cache, mask = caches[idx]
        if mask is not None:
            grad = grad * mask
        if isinstance(layer, CgauLayer):
            layer_grads, grad = cgau_backward(layer, cache, grad, h)
        else:
            layer_grads, grad = relu_backward(layer, cache, grad)
        hidden_grads[idx] = layer_grads
    return loss, ModelGrads(hidden_grads, out_grads)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass
class MomentumState:
    """Velocity buffers, one per parameter array (same iteration order)."""

    velocities: list = field(default_factory=list)

    @classmethod
    def zeros_like(cls, model: ClassifierModel) -> "MomentumState":
        return cls([np.zeros_like(a) for a in model.all_arrays()])

    def reset(self) -> None:
        for v in self.velocities:
            v[:] = 0.0


def sgd_step(
    model: ClassifierModel,
    grads: ModelGrads,
    learning_rate: float,
    momentum: float = 0.0,
    momentum_state: MomentumState | None = None,
) -> None:
    """In-place SGD update: p -= lr * g, or with momentum v = mu*v + g."""
    params = model.all_arrays()
    grad_arrays = grads.all_arrays()
    if len(params) != len(grad_arrays):
        raise DimensionError("gradient structure does not match model")
    for p, g in zip(params, grad_arrays):
        if p.shape != g.shape:
            raise DimensionError(
                f"gradient shape {g.shape} does not match parameter {p.shape}"
            )
    if momentum != 0.0:
        if momentum_state is None:
            raise DimensionError("momentum requires a MomentumState")
        for p, g, v in zip(params, grad_arrays, momentum_state.velocities):
            v *= momentum
            v += g
            p -= learning_rate * v
    else:
        for p, g in zip(params, grad_arrays):
            p -= learning_rate * g


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

def finite_difference_grads(
    model: ClassifierModel,
    x: np.ndarray,
    y: np.ndarray,
    h: ClientOneHot | None,
    epsilon: float = 1e-5,
) -> list[np.ndarray]:
    """Central finite differences of the loss wrt every parameter entry."""
    out = []
    for param in model.all_arrays():
        grad = np.zeros_like(param)
        flat = param.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            logits, _ = model_forward(model, x, h, training=False)
            up = loss_from_logits(logits, y, model.task)
            flat[i] = orig - epsilon
            logits, _ = model_forward(model, x, h, training=False)
            down = loss_from_logits(logits, y, model.task)
            flat[i] = orig
            flat_grad[i] = (up - down) / (2.0 * epsilon)
        out.append(grad)
    return out


def max_relative_error(
    analytic: list[np.ndarray], numeric: list[np.ndarray], guard: float = 1e-8
) -> float:
    """Max elementwise |a - n| / max(|a| + |n|, guard) over all blocks."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(n), guard)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def gradient_check(
    seed: int = 0,
    num_models: int = 100,
    tolerance: float = 1e-5,
    epsilon: float = 1e-5,
) -> list[dict]:
    """Compare analytic gradients with finite differences on random models.

    Each case draws a random small architecture (CGAU or ReLU hidden layers,
    binary or multiclass head, dropout disabled), a random batch, and a
    random client. Returns one report dict per case.
    """
    rng = make_rng(seed)
    reports = []
    for case in range(num_models):
        unit = "cgau" if rng.random() < 0.5 else "relu"
        in_dim = int(rng.integers(1, 6))
        depth = int(rng.integers(1, 3))
        hidden = [int(rng.integers(1, 5)) for _ in range(depth)]
        k = int(rng.integers(1, 4))
        num_classes = 2 if rng.random() < 0.5 else int(rng.integers(3, 6))
        batch = int(rng.integers(1, 9))
        model = init_model(
            in_dim, hidden, num_classes, unit,
            num_clients=k, dropout_rate=0.0,
            seed=int(rng.integers(0, 2**63 - 1)),
        )
        # randomize the zero-initialized blocks (biases, conditioning) so
        # the loss is probed at a generic point: zero biases can park a
        # clipped ReLU row exactly on the kink, where central differences
        # disagree with any subgradient convention
        for layer in model.hidden_layers:
            if isinstance(layer, CgauLayer):
                layer.b_filter[:] = rng.normal(0.0, 0.3, layer.b_filter.shape)
                layer.b_gate[:] = rng.normal(0.0, 0.3, layer.b_gate.shape)
                layer.v_filter[:] = rng.normal(0.0, 0.5, layer.v_filter.shape)
                layer.v_gate[:] = rng.normal(0.0, 0.5, layer.v_gate.shape)
            else:
                layer.bias[:] = rng.normal(0.0, 0.3, layer.bias.shape)
        model.output_layer.bias[:] = rng.normal(
            0.0, 0.3, model.output_layer.bias.shape
        )
        x = rng.normal(0.0, 1.0, (batch, in_dim))
        y = rng.integers(0, 2 if model.task == BINARY else num_classes, batch)
        h = ClientOneHot(int(rng.integers(0, k)), k) if unit == "cgau" else None
        _, grads = loss_and_gradients(model, x, y, h, training=False)
        numeric = finite_difference_grads(model, x, y, h, epsilon=epsilon)
        err = max_relative_error(grads.all_arrays(), numeric)
        reports.append({
            "case": case,
            "unit": unit,
            "task": model.task,
            "max_relative_error": err,
            "passed": err < tolerance,
        })
    return reports


# ---------------------------------------------------------------------------
# checkpoint serialization
# ---------------------------------------------------------------------------

def _write_array(stream: BinaryIO, arr: np.ndarray) -> None:
    stream.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def save_model(model: ClassifierModel, target: Union[str, BinaryIO]) -> None:
    """Write a self-describing little-endian checkpoint; round-trips bit-exactly."""
    if isinstance(target, str):
        with open(target, "wb") as fh:
            save_model(model, fh)
        return
    stream = target
    stream.write(CHECKPOINT_MAGIC)
    stream.write(struct.pack("<I", CHECKPOINT_VERSION))
    stream.write(struct.pack("<I", _TASK_TAGS[model.task]))
    stream.write(struct.pack("<d", model.dropout_rate))
    stream.write(struct.pack("<I", len(model.hidden_layers)))
    for layer in model.hidden_layers:
        if isinstance(layer, CgauLayer):
            stream.write(struct.pack("<I", _KIND_CGAU))
            stream.write(struct.pack(
                "<III", layer.in_dim, layer.out_dim, layer.num_clients
            ))
            for arr in (layer.w_filter, layer.w_gate, layer.b_filter,
                        layer.b_gate, layer.v_filter, layer.v_gate):
                _write_array(stream, arr)
        else:
            stream.write(struct.pack("<I", _KIND_RELU))
            stream.write(struct.pack("<II", layer.in_dim, layer.out_dim))
            _write_array(stream, layer.weight)
            _write_array(stream, layer.bias)
    out = model.output_layer
    stream.write(struct.pack("<II", out.weight.shape[0], out.weight.shape[1]))
    _write_array(stream, out.weight)
    _write_array(stream, out.bias)


class _Reader:
    def __init__(self, stream: BinaryIO):
        self.stream = stream
        self.offset = 0

    def read(self, count: int, what: str) -> bytes:
        data = self.stream.read(count)
        if len(data) != count:
            raise ParseError(
                f"truncated checkpoint reading {what}: wanted {count} bytes, "
                f"got {len(data)}", self.offset,
            )
        self.offset += count
        return data

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.read(4, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.read(8, what))[0]

    def array(self, shape: tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        data = self.read(count * 8, what)
        return np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(shape)


def load_model(source: Union[str, BinaryIO]) -> ClassifierModel:
    """Parse a checkpoint written by :func:`save_model`."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_model(fh)
    reader = _Reader(source)
    magic = reader.read(4, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}", 0)
    version = reader.u32("version")
    if version != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {version}", 4)
    task_tag = reader.u32("task tag")
    if task_tag not in _TAG_TASKS:
        raise ParseError(f"unknown task tag {task_tag}", 8)
    dropout = reader.f64("dropout rate")
    layer_count = reader.u32("layer count")
    layers: list[HiddenLayer] = []
    for i in range(layer_count):
        kind = reader.u32(f"layer {i} kind")
        if kind == _KIND_CGAU:
            d = reader.u32("in dim")
            n = reader.u32("out dim")
            k = reader.u32("client count")
            layers.append(CgauLayer(
                w_filter=reader.array((d, n), "w_filter"),
                w_gate=reader.array((d, n), "w_gate"),
                b_filter=reader.array((n,), "b_filter"),
                b_gate=reader.array((n,), "b_gate"),
                v_filter=reader.array((k, n), "v_filter"),
                v_gate=reader.array((k, n), "v_gate"),
            ))
        elif kind == _KIND_RELU:
            d = reader.u32("in dim")
            n = reader.u32("out dim")
            layers.append(ReluLayer(
                weight=reader.array((d, n), "weight"),
                bias=reader.array((n,), "bias"),
            ))
        else:
            raise ParseError(f"unknown layer kind tag {kind}", reader.offset - 4)
    rows = reader.u32("output rows")
    cols = reader.u32("output cols")
    output = OutputLayer(
        weight=reader.array((rows, cols), "output weight"),
        bias=reader.array((cols,), "output bias"),
    )
    return ClassifierModel(layers, output, _TAG_TASKS[task_tag], dropout)


def dumps_model(model: ClassifierModel) -> bytes:
    buf = io.BytesIO()
    save_model(model, buf)
    return buf.getvalue()


def loads_model(blob: bytes) -> ClassifierModel:
    return load_model(io.BytesIO(blob))
