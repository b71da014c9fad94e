"""Two-stream convolutional models written directly in numpy.

Both models share one backbone layout. Each 32x32 input stream (rgb, and
depth replicated to three channels) runs through

    conv3x3(3->8) -> relu -> maxpool2 -> conv3x3(8->16) -> relu -> maxpool2

giving 8x8x16 per stream. The streams are concatenated to 8x8x32, fused by
conv3x3(32->32) -> relu, flattened to 2048 and mapped through a hidden fully
connected layer of width 64 to the head. The point classifier ("sgpa") ends
in two logits trained with cross entropy; the region scorer ("fre") ends in
one sigmoid unit trained with squared error.

Inputs are NHWC; internally activations are channels-first. Parameters
live in an ordered dict of float arrays; the dtype of the parameters
decides the dtype of the whole computation, so float32 is used for
training and float64 for gradient checking.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .io_util import atomic_write_bytes

SGPA = "sgpa"
FRE = "fre"
HEAD_KINDS = (SGPA, FRE)

INPUT_SIZE = 32
HIDDEN = 64
ARCH_NAME = "two-stream-conv-v1"

WEIGHTS_MAGIC = b"SAW1"

# samples per internal compute chunk; keeps im2col buffers cache-resident
CHUNK = 16

# subtracted from both input streams inside the model
INPUT_CENTER = 0.5


def param_shapes(head_kind: str) -> dict[str, tuple[int, ...]]:
    """Layer name -> shape, in declaration order."""
    if head_kind not in HEAD_KINDS:
        raise ValueError(f"unknown head kind {head_kind!r}")
    out = 2 if head_kind == SGPA else 1
    shapes: dict[str, tuple[int, ...]] = {}
    for stream in ("rgb", "depth"):
        shapes[f"{stream}.conv1.w"] = (8, 3, 3, 3)
        shapes[f"{stream}.conv1.b"] = (8,)
        shapes[f"{stream}.conv2.w"] = (16, 8, 3, 3)
        shapes[f"{stream}.conv2.b"] = (16,)
    shapes["fuse.w"] = (32, 32, 3, 3)
    shapes["fuse.b"] = (32,)
    shapes["fc1.w"] = (2048, HIDDEN)
    shapes["fc1.b"] = (HIDDEN,)
    shapes["head.w"] = (HIDDEN, out)
    shapes["head.b"] = (out,)
    return shapes


@dataclass
class ModelParams:
    head_kind: str
    tensors: dict[str, np.ndarray]
    seed: int | None = None

    def copy(self) -> "ModelParams":
        return ModelParams(self.head_kind, {k: v.copy() for k, v in self.tensors.items()}, self.seed)

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            self.head_kind, {k: v.astype(dtype) for k, v in self.tensors.items()}, self.seed
        )

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    def num_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())


def init_params(head_kind: str, seed: int, dtype=np.float32) -> ModelParams:
    """He-uniform weights (bound sqrt(6 / fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in param_shapes(head_kind).items():
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape, dtype=dtype)
            continue
        fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
        bound = np.sqrt(6.0 / fan_in)
        if name == "head.w":
            # keeps initial logits / scores near the neutral point
            bound = np.sqrt(1.0 / fan_in)
        tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return ModelParams(head_kind, tensors, seed)


def zero_params(head_kind: str, dtype=np.float32) -> ModelParams:
    tensors = {k: np.zeros(s, dtype=dtype) for k, s in param_shapes(head_kind).items()}
    return ModelParams(head_kind, tensors, None)


def fit_output_bias(params: ModelParams, target) -> ModelParams:
    """Copy of ``params`` whose head bias matches the target prior.

    Starting the output at the data mean keeps early Adam steps from driving
    every hidden unit dark just to shrink the sigmoid towards small targets.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.size == 0:
        raise ValueError("need at least one target")
    out = params.copy()
    b = out.tensors["head.b"]
    if params.head_kind == FRE:
        mu = float(np.clip(target.mean(), 1e-3, 1 - 1e-3))
        b[:] = np.log(mu / (1 - mu))
    else:
        p1 = float(np.clip(target.mean(), 1e-3, 1 - 1e-3))
        b[:] = [np.log(1 - p1), np.log(p1)]
    return out


def prepare_inputs(rgb: np.ndarray, depth: np.ndarray, floor_depth: float, box_depth: float):
    """Turn raw crops into model inputs.

    ``rgb`` is (N, 32, 32, 3) in [0, 1] and passes through unchanged.
    ``depth`` is (N, 32, 32) in meters from the camera and becomes height
    above the floor in units of box depth, replicated to three channels.
    """
    height = (floor_depth - np.asarray(depth, dtype=np.float32)) / box_depth
    d3 = np.repeat(height[..., None], 3, axis=-1)
    return np.asarray(rgb, dtype=np.float32), d3.astype(np.float32)


# ---------------------------------------------------------------- layers
# Activations are kept channels-first as (C, N, H, W) so that the im2col
# copies move contiguous image rows.


def _conv_forward(x, w, b):
    c, n, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    cols = np.empty((c, 9, n, h, wd), dtype=x.dtype)
    for i in range(3):
        for j in range(3):
            cols[:, 3 * i + j] = xp[:, :, i : i + h, j : j + wd]
    cols = cols.reshape(c * 9, n * h * wd)
    out = w.reshape(w.shape[0], -1) @ cols
    out += b[:, None]
    return out.reshape(-1, n, h, wd), cols


def _conv_backward(dout, cols, x_shape, w, need_dx=True):
    c, n, h, wd = x_shape
    o = w.shape[0]
    d2 = dout.reshape(o, -1)
    wmat = w.reshape(o, -1)
    dw = (d2 @ cols.T).reshape(w.shape)
    db = d2.sum(axis=1)
    if not need_dx:
        return None, dw, db
    dcols = (wmat.T @ d2).reshape(c, 9, n, h, wd)
    dxp = np.zeros((c, n, h + 2, wd + 2), dtype=dout.dtype)
    for i in range(3):
        for j in range(3):
            dxp[:, :, i : i + h, j : j + wd] += dcols[:, 3 * i + j]
    return dxp[:, :, 1:-1, 1:-1], dw, db


_POOL_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))


def _pool_forward(x, with_arg=True):
    q = [x[..., i::2, j::2] for i, j in _POOL_OFFSETS]
    out = np.maximum(np.maximum(q[0], q[1]), np.maximum(q[2], q[3]))
    if not with_arg:
        return out, None
    # one-hot winner masks; the first maximal element in scan order wins
    taken = q[0] == out
    masks = [taken]
    for k in (1, 2):
        m = q[k] == out
        m &= ~taken
        taken = taken | m
        masks.append(m)
    masks.append(~taken)
    return out, masks


def _pool_backward(dout, masks, x_shape):
    dx = np.empty(x_shape, dtype=dout.dtype)
    for (i, j), m in zip(_POOL_OFFSETS, masks):
        np.multiply(dout, m, out=dx[..., i::2, j::2])
    return dx


def _stream_forward(p, prefix, x, cache):
    keep = cache is not None
    z1, cols1 = _conv_forward(x, p[f"{prefix}.conv1.w"], p[f"{prefix}.conv1.b"])
    a1 = np.maximum(z1, 0)
    p1, arg1 = _pool_forward(a1, keep)
    z2, cols2 = _conv_forward(p1, p[f"{prefix}.conv2.w"], p[f"{prefix}.conv2.b"])
    a2 = np.maximum(z2, 0)
    p2, arg2 = _pool_forward(a2, keep)
    if cache is not None:
        cache[prefix] = (x.shape, cols1, z1, arg1, p1.shape, cols2, z2, arg2)
    return p2


def _stream_backward(p, prefix, dp2, cache, grads):
    x_shape, cols1, z1, arg1, p1_shape, cols2, z2, arg2 = cache[prefix]
    da2 = _pool_backward(dp2, arg2, z2.shape)
    dz2 = da2 * (z2 > 0)
    dp1, grads[f"{prefix}.conv2.w"], grads[f"{prefix}.conv2.b"] = _conv_backward(
        dz2, cols2, p1_shape, p[f"{prefix}.conv2.w"]
    )
    da1 = _pool_backward(dp1, arg1, z1.shape)
    dz1 = da1 * (z1 > 0)
    _, grads[f"{prefix}.conv1.w"], grads[f"{prefix}.conv1.b"] = _conv_backward(
        dz1, cols1, x_shape, p[f"{prefix}.conv1.w"], need_dx=False
    )


def _check_inputs(rgb, d3):
    for name, arr in (("rgb", rgb), ("depth", d3)):
        if arr.ndim != 4 or arr.shape[1:] != (INPUT_SIZE, INPUT_SIZE, 3):
            raise ValueError(f"{name} input must be (N, 32, 32, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {name} input")


def _forward(params: ModelParams, rgb, d3, cache=None):
    p = params.tensors
    dtype = params.dtype
    rgb = np.asarray(rgb, dtype=dtype)
    d3 = np.asarray(d3, dtype=dtype)
    _check_inputs(rgb, d3)
    n = rgb.shape[0]
    # centred inputs: a zero-bias relu net cannot tell x from 2x otherwise
    rgb = rgb - dtype.type(INPUT_CENTER)
    d3 = d3 - dtype.type(INPUT_CENTER)
    fa = _stream_forward(p, "rgb", np.ascontiguousarray(rgb.transpose(3, 0, 1, 2)), cache)
    fb = _stream_forward(p, "depth", np.ascontiguousarray(d3.transpose(3, 0, 1, 2)), cache)
    fused_in = np.concatenate([fa, fb], axis=0)
    zf, colsf = _conv_forward(fused_in, p["fuse.w"], p["fuse.b"])
    af = np.maximum(zf, 0)
    flat = af.transpose(1, 0, 2, 3).reshape(n, -1)
    zh = flat @ p["fc1.w"] + p["fc1.b"]
    ah = np.maximum(zh, 0)
    out = ah @ p["head.w"] + p["head.b"]
    if cache is not None:
        cache["fuse"] = (fused_in.shape, colsf, zf)
        cache["fc"] = (flat, zh, ah)
    return out


def forward(params: ModelParams, rgb, d3) -> np.ndarray:
    """Batched forward pass.

    Returns (N, 2) logits for the point classifier and (N,) scores in (0, 1)
    for the region scorer.
    """
    out = _forward(params, rgb, d3)
    if params.head_kind == FRE:
        return _sigmoid(out[:, 0])
    return out


def forward_batched(params: ModelParams, rgb, d3, batch_size: int = CHUNK) -> np.ndarray:
    chunks = [
        forward(params, rgb[i : i + batch_size], d3[i : i + batch_size])
        for i in range(0, len(rgb), batch_size)
    ]
    if not chunks:
        shape = (0, 2) if params.head_kind == SGPA else (0,)
        return np.zeros(shape, dtype=params.dtype)
    return np.concatenate(chunks)


def predict_labels(params: ModelParams, rgb, d3, batch_size: int = CHUNK) -> np.ndarray:
    """Hard 0/1 decisions of the point classifier (ties go to class 0)."""
    logits = forward_batched(params, rgb, d3, batch_size)
    return (logits[:, 1] > logits[:, 0]).astype(np.uint8)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    logits = np.atleast_2d(logits)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    return float(-log_softmax(logits)[np.arange(len(labels)), labels].mean())


def mse(scores: np.ndarray, targets: np.ndarray) -> float:
    d = np.atleast_1d(scores) - np.atleast_1d(targets)
    return float(np.mean(d * d))


def loss(head_kind: str, output: np.ndarray, target: np.ndarray) -> float:
    if head_kind == SGPA:
        return cross_entropy(output, target)
    return mse(output, target)


def loss_and_grads(params: ModelParams, rgb, d3, target) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss and its gradient with respect to every parameter.

    Large batches are processed in fixed chunks whose contributions are
    summed in order, so results do not depend on anything but the inputs.
    """
    n = len(rgb)
    if n == 0:
        raise ValueError("empty batch")
    if n <= CHUNK:
        return _loss_and_grads(params, rgb, d3, target)
    target = np.asarray(target)
    total = 0.0
    acc = None
    for start in range(0, n, CHUNK):
        sl = slice(start, start + CHUNK)
        m = len(target[sl])
        value, grads = _loss_and_grads(params, rgb[sl], d3[sl], target[sl])
        total += value * m
        if acc is None:
            acc = {k: g * m for k, g in grads.items()}
        else:
            for k, g in grads.items():
                acc[k] += g * m
    return total / n, {k: g / n for k, g in acc.items()}


def _loss_and_grads(params: ModelParams, rgb, d3, target):
    p = params.tensors
    cache: dict = {}
    out = _forward(params, rgb, d3, cache)
    n = out.shape[0]
    target = np.asarray(target)

    if params.head_kind == SGPA:
        labels = target.astype(np.int64)
        logp = log_softmax(out)
        value = float(-logp[np.arange(n), labels].mean())
        dout = np.exp(logp)
        dout[np.arange(n), labels] -= 1.0
        dout /= n
    else:
        s = _sigmoid(out[:, 0])
        diff = s - target.astype(out.dtype)
        value = float(np.mean(diff * diff))
        dout = (2.0 / n * diff * s * (1.0 - s))[:, None]
    dout = dout.astype(out.dtype)

    grads: dict[str, np.ndarray] = {}
    flat, zh, ah = cache["fc"]
    grads["head.w"] = ah.T @ dout
    grads["head.b"] = dout.sum(axis=0)
    dzh = (dout @ p["head.w"].T) * (zh > 0)
    grads["fc1.w"] = flat.T @ dzh
    grads["fc1.b"] = dzh.sum(axis=0)
    dflat = dzh @ p["fc1.w"].T

    fused_shape, colsf, zf = cache["fuse"]
    c, _, fh, fw = zf.shape
    dzf = dflat.reshape(n, c, fh, fw).transpose(1, 0, 2, 3) * (zf > 0)
    dfused, grads["fuse.w"], grads["fuse.b"] = _conv_backward(dzf, colsf, fused_shape, p["fuse.w"])
    _stream_backward(p, "rgb", dfused[:16], cache, grads)
    _stream_backward(p, "depth", dfused[16:], cache, grads)
    ordered = {k: grads[k] for k in p}
    return value, ordered


def backward(params: ModelParams, rgb, d3, target) -> dict[str, np.ndarray]:
    return loss_and_grads(params, rgb, d3, target)[1]


def activation_signature(params: ModelParams, rgb, d3) -> bytes:
    """Fingerprint of every relu on/off state and max-pool winner."""
    cache: dict = {}
    _forward(params, rgb, d3, cache)
    parts = []
    for prefix in ("rgb", "depth"):
        _, _, z1, arg1, _, _, z2, arg2 = cache[prefix]
        parts += [z1 > 0, *arg1, z2 > 0, *arg2]
    parts.append(cache["fuse"][2] > 0)
    parts.append(cache["fc"][1] > 0)
    return b"".join(np.ascontiguousarray(a).tobytes() for a in parts)


# ---------------------------------------------------------------- optimizers


@dataclass
class TrainConfig:
    optimizer: str = "sgd"
    learning_rate: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 1e-5
    epochs: int = 100
    batch_size: int = 64
    loss: str = "cross_entropy"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def sgpa_default(cls) -> "TrainConfig":
        return cls(optimizer="sgd", epochs=100, loss="cross_entropy")

    @classmethod
    def fre_default(cls) -> "TrainConfig":
        return cls(optimizer="adam", epochs=300, loss="mse", momentum=0.0, weight_decay=0.0)


@dataclass
class OptimizerState:
    kind: str
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, kind: str, params: ModelParams) -> "OptimizerState":
        if kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {kind!r}")
        first = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        second = {k: np.zeros_like(v) for k, v in params.tensors.items()} if kind == "adam" else {}
        return cls(kind, first, second, 0)


def sgd_step(params: ModelParams, grads, state: OptimizerState, cfg: TrainConfig) -> ModelParams:
    """Classic momentum SGD with L2 weight decay folded into the gradient."""
    new = {}
    for k, w in params.tensors.items():
        v = state.buffers[k]
        v *= cfg.momentum
        v += grads[k] + cfg.weight_decay * w
        new[k] = w - cfg.learning_rate * v
    state.step += 1
    return ModelParams(params.head_kind, new, params.seed)


def adam_step(params: ModelParams, grads, state: OptimizerState, cfg: TrainConfig) -> ModelParams:
    state.step += 1
    t = state.step
    c1 = 1.0 - cfg.beta1**t
    c2 = 1.0 - cfg.beta2**t
    new = {}
    for k, w in params.tensors.items():
        g = grads[k]
        m = state.buffers[k]
        v = state.second[k]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        mhat = m / c1
        vhat = v / c2
        new[k] = (w - cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.eps)).astype(w.dtype)
    return ModelParams(params.head_kind, new, params.seed)


def optimizer_step(params, grads, state, cfg):
    if state.kind == "sgd":
        return sgd_step(params, grads, state, cfg)
    return adam_step(params, grads, state, cfg)


# ---------------------------------------------------------------- training


@dataclass
class TensorSet:
    """Model-ready arrays: rgb and depth3 are (N, 32, 32, 3)."""

    rgb: np.ndarray
    depth3: np.ndarray
    target: np.ndarray

    def __len__(self) -> int:
        return len(self.target)

    def take(self, idx) -> "TensorSet":
        return TensorSet(self.rgb[idx], self.depth3[idx], self.target[idx])


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float | None
    val_accuracy: float | None


def evaluate(params: ModelParams, data: TensorSet, batch_size: int = CHUNK) -> tuple[float, float | None]:
    """Mean loss and, for the classifier, accuracy over ``data``."""
    out = forward_batched(params, data.rgb, data.depth3, batch_size)
    if params.head_kind == SGPA:
        labels = data.target.astype(np.int64)
        acc = float(np.mean((out[:, 1] > out[:, 0]).astype(np.int64) == labels))
        return cross_entropy(out, labels), acc
    return mse(out, data.target), None


def train(
    params: ModelParams,
    train_set: TensorSet,
    val_set: TensorSet | None,
    cfg: TrainConfig,
    seed: int,
    transform=None,
) -> tuple[ModelParams, list[EpochRecord]]:
    """Shuffled mini-batch training; deterministic for a fixed seed.

    ``transform(epoch, indices, batch)`` may replace each mini-batch before
    the gradient step (used to serve rotated copies of stored samples).
    """
    if len(train_set) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(seed)
    state = OptimizerState.for_params(cfg.optimizer, params)
    history: list[EpochRecord] = []
    n = len(train_set)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch = train_set.take(idx)
            if transform is not None:
                batch = transform(epoch - 1, idx, batch)
            value, grads = loss_and_grads(params, batch.rgb, batch.depth3, batch.target)
            params = optimizer_step(params, grads, state, cfg)
            total += value * len(idx)
        val_loss = val_acc = None
        if val_set is not None and len(val_set):
            val_loss, val_acc = evaluate(params, val_set)
        history.append(EpochRecord(epoch, total / n, val_loss, val_acc))
    return params, history


# ---------------------------------------------------------------- gradient check


def grad_check(
    params: ModelParams,
    rgb,
    d3,
    target,
    seed: int = 0,
    per_layer: int = 10,
    h: float = 1e-4,
    grad_fn=None,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Runs in float64. Coordinates whose +/-h perturbation flips a relu or a
    pool winner are resampled: the difference quotient straddles a kink
    there and says nothing about the derivative.
    """
    p64 = params.astype(np.float64)
    rgb = np.asarray(rgb, dtype=np.float64)
    d3 = np.asarray(d3, dtype=np.float64)
    grad_fn = grad_fn or backward
    grads = grad_fn(p64, rgb, d3, target)
    base_sig = activation_signature(p64, rgb, d3)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, w in p64.tensors.items():
        flat = w.reshape(-1)
        candidates = rng.permutation(flat.size)
        checked = 0
        for idx in candidates:
            if checked >= per_layer:
                break
            old = flat[idx]
            flat[idx] = old + h
            sig_p = activation_signature(p64, rgb, d3)
            lp = _loss_value(p64, rgb, d3, target)
            flat[idx] = old - h
            sig_m = activation_signature(p64, rgb, d3)
            lm = _loss_value(p64, rgb, d3, target)
            flat[idx] = old
            if sig_p != base_sig or sig_m != base_sig:
                continue
            numeric = (lp - lm) / (2 * h)
            analytic = grads[name].reshape(-1)[idx]
            denom = max(abs(numeric), abs(analytic))
            if denom > 1e-10:
                worst = max(worst, abs(numeric - analytic) / denom)
            checked += 1
    return worst


def _loss_value(params, rgb, d3, target) -> float:
    return loss(params.head_kind, forward(params, rgb, d3), target)


# ---------------------------------------------------------------- weight files


def weights_to_bytes(params: ModelParams, extra: dict | None = None) -> bytes:
    """Header JSON plus little-endian float32 tensors in declaration order."""
    shapes = param_shapes(params.head_kind)
    header = {
        "architecture": ARCH_NAME,
        "head_kind": params.head_kind,
        "seed": params.seed,
        "dtype": "<f4",
        "tensors": [{"name": k, "shape": list(s)} for k, s in shapes.items()],
    }
    if extra:
        header["extra"] = extra
    hbytes = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(WEIGHTS_MAGIC)
    buf.write(struct.pack("<I", len(hbytes)))
    buf.write(hbytes)
    for k in shapes:
        buf.write(np.ascontiguousarray(params.tensors[k], dtype="<f4").tobytes())
    return buf.getvalue()


def weights_from_bytes(data: bytes) -> tuple[ModelParams, dict]:
    if data[:4] != WEIGHTS_MAGIC:
        raise ValueError("not a weight file")
    (hlen,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8 : 8 + hlen])
    if header.get("architecture") != ARCH_NAME:
        raise ValueError(f"unsupported architecture {header.get('architecture')!r}")
    offset = 8 + hlen
    expected = param_shapes(header["head_kind"])
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        if expected.get(entry["name"]) != shape:
            raise ValueError(f"shape mismatch for {entry['name']}")
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(data):
            raise ValueError("truncated weight file")
        tensors[entry["name"]] = np.frombuffer(data[offset:end], dtype="<f4").reshape(shape).astype(np.float32)
        offset = end
    if offset != len(data):
        raise ValueError("trailing bytes in weight file")
    return ModelParams(header["head_kind"], tensors, header.get("seed")), header.get("extra", {})


def save_weights(params: ModelParams, path, extra: dict | None = None) -> None:
    atomic_write_bytes(path, weights_to_bytes(params, extra))


def load_weights(path) -> tuple[ModelParams, dict]:
    with open(path, "rb") as fh:
        return weights_from_bytes(fh.read())
