"""Inference primitives on (time, frequency, channels) arrays.

Everything here is plain numpy in float64.  Convolutions only slide along
frequency (time extent 1) with zero same-padding, so frames never mix.

When a :class:`MacCounter` is active every matrix product reports the
multiply-accumulates it actually performed, keyed by the current layer
scope. ``tests/test_complexity.py`` checks those against the analytic counts.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from contextlib import contextmanager
from typing import Callable, Mapping

import numpy as np

from .config import ModelConfig, weight_layout
from .errors import DimensionError

LayerWeights = Mapping[str, np.ndarray]
ModelWeights = dict  # name -> float32 ndarray, see config.weight_layout

_local = threading.local()


class MacCounter:
    def __init__(self):
        self.counts: dict[str, int] = defaultdict(int)
        self.scope = "<unscoped>"

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@contextmanager
def count_macs():
    """Activate MAC instrumentation for the current thread."""
    prev = getattr(_local, "counter", None)
    counter = MacCounter()
    _local.counter = counter
    try:
        yield counter
    finally:
        _local.counter = prev


@contextmanager
def layer_scope(name: str):
    counter = getattr(_local, "counter", None)
    if counter is None:
        yield
        return
    prev, counter.scope = counter.scope, name
    try:
        yield
    finally:
        counter.scope = prev


def _record(macs: int) -> None:
    counter = getattr(_local, "counter", None)
    if counter is not None:
        counter.counts[counter.scope] += int(macs)


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # every output element costs a.shape[-1] MACs
    _record(a.size // a.shape[-1] * b.size)
    return a @ b


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def linear(x):
    return x


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "relu": relu,
    "sigmoid": sigmoid,
    "tanh": np.tanh,
    "linear": linear,
}


def _check3(x: np.ndarray, channels: int, what: str) -> None:
    if x.ndim != 3:
        raise DimensionError(f"{what}: expected (T, F, C) input, got shape {x.shape}")
    if x.shape[2] != channels:
        raise DimensionError(f"{what}: expected {channels} input channels, got {x.shape[2]}")


def _pad_freq(x: np.ndarray, k: int) -> np.ndarray:
    p = k // 2
    t, f, c = x.shape
    out = np.zeros((t, f + 2 * p, c))
    out[:, p : p + f, :] = x
    return out


def depthwise_conv(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Per-channel cross-correlation along frequency. kernel is (C, k)."""
    c, k = kernel.shape
    _check3(x, c, "depthwise_conv")
    t, f, _ = x.shape
    xp = _pad_freq(x, k)
    _record(t * f * c * k)
    out = xp[:, 0:f, :] * kernel[:, 0]
    for j in range(1, k):
        out += xp[:, j : j + f, :] * kernel[:, j]
    return out + bias


def pointwise_conv(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """1x1 convolution; kernel is (C_in, C_out)."""
    _check3(x, kernel.shape[0], "pointwise_conv")
    return _matmul(x, kernel) + bias


def depthwise_separable_conv(
    x: np.ndarray, w: LayerWeights, out_channels: int, activation: str = "relu"
) -> np.ndarray:
    """Depthwise 1xk then pointwise 1x1, each stage followed by ``activation``."""
    if w["pw.kernel"].shape[1] != out_channels:
        raise DimensionError(
            f"pointwise kernel has {w['pw.kernel'].shape[1]} outputs, expected {out_channels}"
        )
    act = ACTIVATIONS[activation]
    y = act(depthwise_conv(x, w["dw.kernel"], w["dw.bias"]))
    return act(pointwise_conv(y, w["pw.kernel"], w["pw.bias"]))


def conv2d(
    x: np.ndarray,
    w: LayerWeights,
    kernel: tuple[int, int],
    out_channels: int,
    activation: str = "linear",
) -> np.ndarray:
    """Standard convolution with a (1, kf) kernel stored as (1, kf, C_in, C_out)."""
    kt, kf = kernel
    weights = w["kernel"]
    if kt != 1:
        raise DimensionError("only kernels with time extent 1 are supported")
    if weights.shape[:2] != (kt, kf) or weights.shape[3] != out_channels:
        raise DimensionError(
            f"conv2d kernel shape {weights.shape} does not match ({kt}, {kf}, C_in, {out_channels})"
        )
    c_in = weights.shape[2]
    _check3(x, c_in, "conv2d")
    t, f, _ = x.shape
    xp = _pad_freq(x, kf)
    # im2col: (T, F, kf*C_in), tap-major to match the kernel's memory order
    cols = np.concatenate([xp[:, j : j + f, :] for j in range(kf)], axis=2)
    y = _matmul(cols, weights.reshape(kf * c_in, out_channels)) + w["bias"]
    return ACTIVATIONS[activation](y)


def max_pool_freq(x: np.ndarray, factor: int = 2) -> np.ndarray:
    if x.ndim != 3:
        raise DimensionError(f"max_pool_freq: expected (T, F, C), got {x.shape}")
    t, f, c = x.shape
    if f % factor:
        raise DimensionError(f"max_pool_freq: frequency size {f} not divisible by {factor}")
    return x.reshape(t, f // factor, factor, c).max(axis=2)


def _gru_update(gx: np.ndarray, h: np.ndarray, w: LayerWeights) -> np.ndarray:
    """One GRU step given the precomputed input projection gx = x @ W + b_ih."""
    u = h.shape[-1]
    gh = _matmul(h, w["U"]) + w["b_hh"]
    z = sigmoid(gx[..., :u] + gh[..., :u])
    r = sigmoid(gx[..., u : 2 * u] + gh[..., u : 2 * u])
    cand = np.tanh(gx[..., 2 * u :] + r * gh[..., 2 * u :])
    return (1.0 - z) * cand + z * h


def gru_cell(x_t: np.ndarray, h_prev: np.ndarray, w: LayerWeights) -> np.ndarray:
    """Single GRU step, gate order (update z, reset r, candidate).

    Separate input and recurrent biases; the reset gate multiplies the
    recurrent candidate term including its bias.
    """
    n_in, three_u = w["W"].shape
    if x_t.shape[-1] != n_in or h_prev.shape[-1] * 3 != three_u or w["U"].shape != (three_u // 3, three_u):
        raise DimensionError(
            f"gru_cell: x {x_t.shape}, h {h_prev.shape} incompatible with W {w['W'].shape}, U {w['U'].shape}"
        )
    return _gru_update(_matmul(x_t, w["W"]) + w["b_ih"], h_prev, w)


def gru_sequence(x: np.ndarray, h0: np.ndarray, w: LayerWeights, reverse: bool = False) -> np.ndarray:
    """Run a GRU over axis -2 of x (..., steps, features); returns all hidden states."""
    n_in, three_u = w["W"].shape
    if x.shape[-1] != n_in:
        raise DimensionError(f"gru_sequence: input has {x.shape[-1]} features, W expects {n_in}")
    gx = _matmul(x, w["W"]) + w["b_ih"]
    steps = x.shape[-2]
    out = np.empty(x.shape[:-1] + (three_u // 3,))
    h = h0
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for s in order:
        h = _gru_update(gx[..., s, :], h, w)
        out[..., s, :] = h
    return out


def bidirectional_gru_over_freq(x: np.ndarray, w: LayerWeights, units: int = 64) -> np.ndarray:
    """Frequency-axis bidirectional GRU, run independently for every frame.

    ``w`` holds ``fwd.*`` and ``bwd.*`` GRU tensors.  Output channels are the
    forward states followed by the backward states.
    """
    fwd = {k[4:]: v for k, v in w.items() if k.startswith("fwd.")}
    bwd = {k[4:]: v for k, v in w.items() if k.startswith("bwd.")}
    if fwd["U"].shape[0] != units or bwd["U"].shape[0] != units:
        raise DimensionError(f"FGRU weights do not have {units} units")
    if x.ndim != 3:
        raise DimensionError(f"FGRU expects (T, F, C), got {x.shape}")
    h0 = np.zeros((x.shape[0], units))
    return np.concatenate(
        [gru_sequence(x, h0, fwd), gru_sequence(x, h0, bwd, reverse=True)], axis=-1
    )


def fully_connected(x: np.ndarray, w: LayerWeights, activation: str = "linear") -> np.ndarray:
    weight = w["weight"]
    if x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"fully_connected: input {x.shape[-1]} vs weight {weight.shape}")
    return ACTIVATIONS[activation](_matmul(x, weight) + w["bias"])


def init_weights(cfg: ModelConfig, seed: int = 0) -> ModelWeights:
    """Glorot-uniform initialization of every tensor (biases included).

    Tensors are drawn in layout order from a PCG64 stream, so a seed maps to
    bit-identical float32 weights.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    weights: ModelWeights = {}
    for spec in weight_layout(cfg):
        limit = np.sqrt(6.0 / (spec.fan_in + spec.fan_out))
        weights[spec.name] = rng.uniform(-limit, limit, size=spec.shape).astype(np.float32)
    return weights


def init_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))
