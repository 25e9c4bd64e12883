"""Two-stage enhancement network.

Stage 1 (CRN) turns the compressed magnitude into a real mask in [0, 1].
The mask is fused with the noisy phase and stage 2 (a small CNN) produces a
complex ratio mask, which is applied to the compressed noisy spectrogram and
decompressed.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import nn
from .config import ModelConfig, weight_layout
from .dsp import (
    ComplexSpectrogram,
    WavSignal,
    compress_spectrogram,
    compressed_features,
    decompress_spectrogram,
    istft,
    stft,
)
from .errors import DimensionError, WeightFileError
from .reorient import reorient


@dataclass
class ComplexMask:
    real: np.ndarray
    imag: np.ndarray

    def __post_init__(self):
        if self.real.shape != self.imag.shape:
            raise DimensionError("complex mask planes differ in shape")


def layer_names(cfg: ModelConfig) -> list[str]:
    names = [f"stage1.conv{i}" for i in range(1, len(cfg.conv_filters) + 1)]
    names += ["stage1.fgru", "stage1.bottleneck"]
    names += [
        f"stage1.tgru{g}.layer{layer}"
        for g in range(cfg.num_subband_groups)
        for layer in range(cfg.gru_layers_per_group)
    ]
    names += ["stage1.fc1", "stage1.fc2", "stage2.conv1", "stage2.conv2", "stage2.out"]
    return names


class PreparedWeights(dict):
    """Weights validated against a config and regrouped per layer in float64."""

    def __init__(self, weights: dict, cfg: ModelConfig):
        super().__init__()
        validate_weights(weights, cfg)
        layers = sorted(layer_names(cfg), key=len, reverse=True)
        for name, value in weights.items():
            layer = next(p for p in layers if name.startswith(p + "."))
            self.setdefault(layer, {})[name[len(layer) + 1 :]] = np.asarray(value, dtype=np.float64)
        self.cfg = cfg


def validate_weights(weights: dict, cfg: ModelConfig) -> None:
    expected = {s.name: s.shape for s in weight_layout(cfg)}
    for name in expected:
        if name not in weights:
            raise WeightFileError(f"missing tensor {name}")
    for name, value in weights.items():
        if name not in expected:
            raise WeightFileError(f"unexpected tensor {name}")
        if tuple(np.shape(value)) != expected[name]:
            raise WeightFileError(
                f"tensor {name} has shape {tuple(np.shape(value))}, expected {expected[name]}"
            )
        if not np.all(np.isfinite(value)):
            raise WeightFileError(f"tensor {name} contains non-finite values")


def prepare(weights, cfg: ModelConfig) -> PreparedWeights:
    if isinstance(weights, PreparedWeights) and weights.cfg == cfg:
        return weights
    return PreparedWeights(weights, cfg)


@contextmanager
def _layer(name: str):
    try:
        with nn.layer_scope(name):
            yield
    except DimensionError as exc:
        raise DimensionError(f"{name}: {exc}") from exc


def zero_hidden(cfg: ModelConfig) -> list[list[np.ndarray]]:
    return [
        [np.zeros(cfg.gru_units) for _ in range(cfg.gru_layers_per_group)]
        for _ in range(cfg.num_subband_groups)
    ]


def _stage1(magnitude: np.ndarray, w: PreparedWeights, cfg: ModelConfig, hidden):
    """Stage-1 forward pass; returns (mask T x K, final temporal GRU states)."""
    with _layer("stage1.reorient"):
        x = reorient(magnitude, cfg.reorient)
    for i, filters in enumerate(cfg.conv_filters, start=1):
        name = f"stage1.conv{i}"
        with _layer(name):
            if cfg.separable:
                x = nn.depthwise_separable_conv(x, w[name], filters, "relu")
            else:
                x = nn.conv2d(x, w[name], cfg.kernel, filters, "relu")
            if i > 1:
                x = nn.max_pool_freq(x, 2)
    with _layer("stage1.fgru"):
        x = nn.bidirectional_gru_over_freq(x, w["stage1.fgru"], cfg.fgru_units)
    with _layer("stage1.bottleneck"):
        lw = w["stage1.bottleneck"]
        x = nn.relu(nn.pointwise_conv(x, lw["kernel"], lw["bias"]))
    # frequency-major flatten: element (f, c) lands at f * C + c
    flat = x.reshape(x.shape[0], -1)
    if flat.shape[1] != cfg.bottleneck_size:
        raise DimensionError(f"stage1.bottleneck: flattened size {flat.shape[1]} != {cfg.bottleneck_size}")
    new_hidden = []
    outs = []
    for g in range(cfg.num_subband_groups):
        seq = flat[:, g * cfg.group_size : (g + 1) * cfg.group_size]
        states = []
        for layer in range(cfg.gru_layers_per_group):
            name = f"stage1.tgru{g}.layer{layer}"
            with _layer(name):
                seq = nn.gru_sequence(seq, hidden[g][layer], w[name])
            states.append(seq[-1].copy())
        new_hidden.append(states)
        outs.append(seq)
    x = np.concatenate(outs, axis=-1)
    with _layer("stage1.fc1"):
        x = nn.fully_connected(x, w["stage1.fc1"], "relu")
    with _layer("stage1.fc2"):
        mask = nn.fully_connected(x, w["stage1.fc2"], "sigmoid")
    return mask, new_hidden


def stage1_forward(magnitude: np.ndarray, weights, cfg: ModelConfig | None = None) -> np.ndarray:
    """Intermediate magnitude mask (T x 257, values in [0, 1]) from T x 257 x 1 features."""
    cfg = cfg or ModelConfig()
    mask, _ = _stage1(magnitude, prepare(weights, cfg), cfg, zero_hidden(cfg))
    return mask


def fuse_intermediate(
    mask: np.ndarray, phase: np.ndarray, magnitude: np.ndarray | None = None
) -> np.ndarray:
    """Stack mask*cos(phase) and mask*sin(phase) as two channels.

    Passing ``magnitude`` selects the alternative fusion that scales by the
    compressed noisy magnitude as well.
    """
    phase = phase[..., 0] if phase.ndim == 3 else phase
    if mask.shape != phase.shape:
        raise DimensionError(f"mask {mask.shape} and phase {phase.shape} differ")
    amp = mask
    if magnitude is not None:
        magnitude = magnitude[..., 0] if magnitude.ndim == 3 else magnitude
        amp = mask * magnitude
    return np.stack([amp * np.cos(phase), amp * np.sin(phase)], axis=-1)


def stage2_forward(fused: np.ndarray, weights, cfg: ModelConfig | None = None) -> ComplexMask:
    cfg = cfg or ModelConfig()
    w = prepare(weights, cfg)
    if fused.ndim != 3 or fused.shape[2] != 2:
        raise DimensionError(f"stage2 expects (T, F, 2) input, got {fused.shape}")
    with _layer("stage2.conv1"):
        x = nn.conv2d(fused, w["stage2.conv1"], cfg.kernel, cfg.stage2_filters, "relu")
    with _layer("stage2.conv2"):
        x = nn.conv2d(x, w["stage2.conv2"], cfg.kernel, cfg.stage2_filters, "relu")
    with _layer("stage2.out"):
        lw = w["stage2.out"]
        x = nn.pointwise_conv(x, lw["kernel"], lw["bias"])
    return ComplexMask(x[..., 0], x[..., 1])


def apply_crm(noisy_compressed: ComplexSpectrogram, mask: ComplexMask) -> ComplexSpectrogram:
    """Complex multiplication of the spectrogram by the mask."""
    if noisy_compressed.shape != mask.real.shape:
        raise DimensionError(f"spectrogram {noisy_compressed.shape} and mask {mask.real.shape} differ")
    xr, xi = noisy_compressed.real, noisy_compressed.imag
    return ComplexSpectrogram(xr * mask.real - xi * mask.imag, xr * mask.imag + xi * mask.real)


def reconstruct(noisy: ComplexSpectrogram, mask: ComplexMask, alpha: float) -> ComplexSpectrogram:
    """Compress, apply the complex mask, decompress."""
    return decompress_spectrogram(apply_crm(compress_spectrogram(noisy, alpha), mask), alpha)


def ideal_crm(noisy_compressed: ComplexSpectrogram, clean_compressed: ComplexSpectrogram, floor: float = 1e-8) -> ComplexMask:
    """Mask M with noisy*M == clean wherever |noisy| > floor; zero elsewhere."""
    x = noisy_compressed.to_complex()
    s = clean_compressed.to_complex()
    ok = np.abs(x) > floor
    m = np.zeros_like(x)
    m[ok] = s[ok] / x[ok]
    return ComplexMask(m.real.copy(), m.imag.copy())


def _enhance(noisy: ComplexSpectrogram, w: PreparedWeights, cfg: ModelConfig, hidden):
    if noisy.num_bins != cfg.stft.num_bins:
        raise DimensionError(f"expected {cfg.stft.num_bins} bins, got {noisy.num_bins}")
    magnitude, phase = compressed_features(noisy, cfg.alpha)
    mask, hidden = _stage1(magnitude, w, cfg, hidden)
    with _layer("fuse"):
        fused = fuse_intermediate(
            mask, phase, magnitude if cfg.fusion == "masked_magnitude" else None
        )
    crm = stage2_forward(fused, w, cfg)
    return reconstruct(noisy, crm, cfg.alpha), hidden


def enhance_spectrogram(noisy: ComplexSpectrogram, weights, cfg: ModelConfig | None = None) -> ComplexSpectrogram:
    cfg = cfg or ModelConfig()
    out, _ = _enhance(noisy, prepare(weights, cfg), cfg, zero_hidden(cfg))
    return out


def enhance_signal(signal: WavSignal, weights, cfg: ModelConfig | None = None) -> WavSignal:
    """Offline enhancement; output is sample-aligned with the input."""
    cfg = cfg or ModelConfig()
    spec = stft(signal, cfg.stft)
    out = istft(enhance_spectrogram(spec, weights, cfg), cfg.stft, length=len(signal))
    return WavSignal(out.samples, signal.sample_rate)


def compressed_mse(clean: ComplexSpectrogram, estimate: ComplexSpectrogram, alpha: float) -> float:
    """Mean over bins of the squared compressed real and imaginary differences."""
    if clean.shape != estimate.shape:
        raise DimensionError(f"shapes differ: {clean.shape} vs {estimate.shape}")
    c = compress_spectrogram(clean, alpha)
    e = compress_spectrogram(estimate, alpha)
    return float(np.mean((c.real - e.real) ** 2 + (c.imag - e.imag) ** 2))
