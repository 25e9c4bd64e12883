"""Configuration objects and the weight layout derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError

SAMPLE_RATE = 16000


def sqrt_hann(n: int) -> np.ndarray:
    """Periodic square-root Hann window; squared copies at hop n/2 sum to 1."""
    k = np.arange(n)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * k / n))


@dataclass(frozen=True)
class StftConfig:
    window_len_samples: int = 512
    hop_samples: int = 256
    fft_len: int = 512
    window: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.hop_samples <= 0 or self.hop_samples > self.window_len_samples:
            raise ConfigError(f"hop {self.hop_samples} must be in (0, window_len]")
        if self.fft_len < self.window_len_samples:
            raise ConfigError("fft_len must be >= window_len")
        if self.window is None:
            object.__setattr__(self, "window", sqrt_hann(self.window_len_samples))
        window = np.asarray(self.window, dtype=np.float64)
        if window.shape != (self.window_len_samples,):
            raise ConfigError("window length does not match window_len_samples")
        window.setflags(write=False)
        object.__setattr__(self, "window", window)
        if cola_error(window, self.hop_samples) > 1e-9:
            raise ConfigError("analysis/synthesis window pair is not COLA at this hop")

    @property
    def num_bins(self) -> int:
        return self.fft_len // 2 + 1

    @property
    def frames_per_second(self) -> float:
        return SAMPLE_RATE / self.hop_samples


def cola_error(window: np.ndarray, hop: int) -> float:
    """Max deviation from 1 of the overlap-added squared window."""
    n = len(window)
    acc = np.zeros(hop)
    sq = window**2
    for start in range(0, n, hop):
        seg = sq[start : start + hop]
        acc[: len(seg)] += seg
    return float(np.max(np.abs(acc - 1.0)))


@dataclass(frozen=True)
class ReorientConfig:
    num_bins: int = 257
    band_width_bins: int = 48
    overlap_factor: float = 0.33

    def __post_init__(self):
        if not 0 < self.band_width_bins <= self.num_bins:
            raise ConfigError("band width must be in (0, num_bins]")
        if not 0.0 <= self.overlap_factor < 1.0:
            raise ConfigError("overlap factor must be in [0, 1)")

    @property
    def hop_bins(self) -> int:
        return max(1, round(self.band_width_bins * (1.0 - self.overlap_factor)))

    @property
    def num_bands(self) -> int:
        return math.ceil((self.num_bins - self.band_width_bins) / self.hop_bins) + 1

    @property
    def padded_bins(self) -> int:
        return self.num_bands * self.hop_bins + (self.band_width_bins - self.hop_bins)


@dataclass(frozen=True)
class ModelConfig:
    alpha: float = 0.3
    conv_filters: tuple[int, ...] = (32, 64, 96, 128)
    kernel: tuple[int, int] = (1, 3)
    separable: bool = True
    fgru_units: int = 64
    post_fgru_pointwise: int = 64
    num_subband_groups: int = 2
    gru_layers_per_group: int = 2
    gru_units: int = 128
    fc_neurons: int = 257
    stage2_filters: int = 32
    stage2_out_channels: int = 2
    # "mask_phase": mask*cos/sin(phase); "masked_magnitude": mask*|X|*cos/sin(phase)
    fusion: str = "mask_phase"
    reorient: ReorientConfig = field(default_factory=ReorientConfig)
    stft: StftConfig = field(default_factory=StftConfig)

    def __post_init__(self):
        object.__setattr__(self, "conv_filters", tuple(self.conv_filters))
        object.__setattr__(self, "kernel", tuple(self.kernel))
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        counts = (
            *self.conv_filters, self.fgru_units, self.post_fgru_pointwise,
            self.num_subband_groups, self.gru_layers_per_group, self.gru_units,
            self.fc_neurons, self.stage2_filters, self.stage2_out_channels,
        )
        if not self.conv_filters or any(c <= 0 for c in counts):
            raise ConfigError("all layer sizes must be positive")
        if self.kernel[0] != 1 or self.kernel[1] % 2 != 1:
            raise ConfigError("kernel must have time extent 1 and odd frequency extent")
        if self.fc_neurons != self.stft.num_bins:
            raise ConfigError("fc_neurons must equal the number of STFT bins")
        if self.reorient.num_bins != self.stft.num_bins:
            raise ConfigError("reorientation and STFT disagree on the bin count")
        if self.stage2_out_channels != 2:
            raise ConfigError("the complex mask needs exactly 2 output channels")
        if self.fusion not in ("mask_phase", "masked_magnitude"):
            raise ConfigError(f"unknown fusion mode {self.fusion!r}")
        if self.bottleneck_size % self.num_subband_groups:
            raise ConfigError("bottleneck does not split evenly into subband groups")

    @property
    def bottleneck_freq(self) -> int:
        """Frequency extent after the conv block (pooling in all layers but the first)."""
        f = self.reorient.band_width_bins
        for _ in self.conv_filters[1:]:
            f //= 2
        return f

    @property
    def bottleneck_size(self) -> int:
        return self.bottleneck_freq * self.post_fgru_pointwise

    @property
    def group_size(self) -> int:
        return self.bottleneck_size // self.num_subband_groups


class TensorSpec(NamedTuple):
    name: str
    shape: tuple[int, ...]
    fan_in: int
    fan_out: int


def _gru_specs(prefix: str, n_in: int, units: int) -> list[TensorSpec]:
    return [
        TensorSpec(f"{prefix}.W", (n_in, 3 * units), n_in, 3 * units),
        TensorSpec(f"{prefix}.U", (units, 3 * units), units, 3 * units),
        TensorSpec(f"{prefix}.b_ih", (3 * units,), n_in, 3 * units),
        TensorSpec(f"{prefix}.b_hh", (3 * units,), units, 3 * units),
    ]


def _dense(prefix: str, n_in: int, n_out: int, kernel: str = "kernel") -> list[TensorSpec]:
    return [
        TensorSpec(f"{prefix}.{kernel}", (n_in, n_out), n_in, n_out),
        TensorSpec(f"{prefix}.bias", (n_out,), n_in, n_out),
    ]


def _conv(prefix: str, kf: int, n_in: int, n_out: int) -> list[TensorSpec]:
    return [
        TensorSpec(f"{prefix}.kernel", (1, kf, n_in, n_out), kf * n_in, kf * n_out),
        TensorSpec(f"{prefix}.bias", (n_out,), kf * n_in, kf * n_out),
    ]


def weight_layout(cfg: ModelConfig) -> list[TensorSpec]:
    """Every named tensor of the two-stage network, in serialization order."""
    kf = cfg.kernel[1]
    specs: list[TensorSpec] = []
    c_in = cfg.reorient.num_bands
    for i, c_out in enumerate(cfg.conv_filters, start=1):
        p = f"stage1.conv{i}"
        if cfg.separable:
            specs += [
                TensorSpec(f"{p}.dw.kernel", (c_in, kf), kf, kf),
                TensorSpec(f"{p}.dw.bias", (c_in,), kf, kf),
            ]
            specs += _dense(f"{p}.pw", c_in, c_out)
        else:
            specs += _conv(p, kf, c_in, c_out)
        c_in = c_out
    for direction in ("fwd", "bwd"):
        specs += _gru_specs(f"stage1.fgru.{direction}", c_in, cfg.fgru_units)
    specs += _dense("stage1.bottleneck", 2 * cfg.fgru_units, cfg.post_fgru_pointwise)
    for g in range(cfg.num_subband_groups):
        n_in = cfg.group_size
        for layer in range(cfg.gru_layers_per_group):
            specs += _gru_specs(f"stage1.tgru{g}.layer{layer}", n_in, cfg.gru_units)
            n_in = cfg.gru_units
    specs += _dense("stage1.fc1", cfg.num_subband_groups * cfg.gru_units, cfg.fc_neurons, "weight")
    specs += _dense("stage1.fc2", cfg.fc_neurons, cfg.fc_neurons, "weight")
    specs += _conv("stage2.conv1", kf, 2, cfg.stage2_filters)
    specs += _conv("stage2.conv2", kf, cfg.stage2_filters, cfg.stage2_filters)
    specs += _dense("stage2.out", cfg.stage2_filters, cfg.stage2_out_channels)
    return specs
