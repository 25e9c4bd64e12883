"""STFT analysis/synthesis and sign-preserving power-law compression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SAMPLE_RATE, StftConfig
from .errors import ConfigError, DimensionError, UnsupportedFormatError


@dataclass
class WavSignal:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise DimensionError("WavSignal holds mono samples only")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("signal contains non-finite samples")

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class ComplexSpectrogram:
    """T x K grid stored as separate real and imaginary planes."""

    real: np.ndarray
    imag: np.ndarray

    def __post_init__(self):
        self.real = np.asarray(self.real, dtype=np.float64)
        self.imag = np.asarray(self.imag, dtype=np.float64)
        if self.real.shape != self.imag.shape or self.real.ndim != 2:
            raise DimensionError(
                f"real/imag planes must be equal 2-D shapes, got {self.real.shape} and {self.imag.shape}"
            )

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexSpectrogram":
        return cls(z.real.copy(), z.imag.copy())

    def to_complex(self) -> np.ndarray:
        return self.real + 1j * self.imag

    @property
    def num_frames(self) -> int:
        return self.real.shape[0]

    @property
    def num_bins(self) -> int:
        return self.real.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.real.shape


def num_frames_for(num_samples: int, cfg: StftConfig) -> int:
    """Frames needed so every input sample is covered by a full overlap-add."""
    return -(-num_samples // cfg.hop_samples) + 1


def stft(signal: WavSignal, cfg: StftConfig | None = None) -> ComplexSpectrogram:
    """Causal STFT.

    The signal is left-padded with ``window_len - hop`` zeros, so frame ``t``
    ends at input sample ``t*hop + hop - 1`` and never looks ahead.  The tail
    is zero-padded to ``num_frames_for(len(signal))`` frames.
    """
    cfg = cfg or StftConfig()
    if signal.sample_rate != SAMPLE_RATE:
        raise UnsupportedFormatError(f"unsupported sample rate {signal.sample_rate} Hz, need {SAMPLE_RATE}")
    n = len(signal.samples)
    if n < cfg.hop_samples:
        raise DimensionError(f"signal of {n} samples is shorter than one hop")
    win, hop = cfg.window_len_samples, cfg.hop_samples
    frames = num_frames_for(n, cfg)
    lead = win - hop
    padded = np.zeros(lead + (frames - 1) * hop + win)
    padded[lead : lead + n] = signal.samples
    idx = np.arange(frames)[:, None] * hop + np.arange(win)[None, :]
    spec = np.fft.rfft(padded[idx] * cfg.window, n=cfg.fft_len, axis=-1)
    return ComplexSpectrogram.from_complex(spec)


def istft(spec: ComplexSpectrogram, cfg: StftConfig | None = None, length: int | None = None) -> WavSignal:
    """Weighted overlap-add inverse of :func:`stft`.

    Returns ``num_frames * hop`` samples aligned with the original input; the
    last hop only has one frame's contribution. ``length`` trims the output.
    """
    cfg = cfg or StftConfig()
    if spec.num_bins != cfg.num_bins:
        raise DimensionError(f"spectrogram has {spec.num_bins} bins, config expects {cfg.num_bins}")
    win, hop = cfg.window_len_samples, cfg.hop_samples
    frames = spec.num_frames
    seg = np.fft.irfft(spec.to_complex(), n=cfg.fft_len, axis=-1)[:, :win] * cfg.window
    lead = win - hop
    out = np.zeros(lead + (frames - 1) * hop + win)
    for t in range(frames):
        out[t * hop : t * hop + win] += seg[t]
    out = out[lead : lead + frames * hop]
    if length is not None:
        if length > len(out):
            raise DimensionError(f"requested {length} samples from {len(out)} available")
        out = out[:length]
    return WavSignal(out)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"power-law factor must be in (0, 1], got {alpha}")


def power_law_compress(value, alpha: float):
    """sign(x) * |x|**alpha, elementwise."""
    _check_alpha(alpha)
    if alpha == 1.0:
        return value
    return np.sign(value) * np.abs(value) ** alpha


def power_law_decompress(value, alpha: float):
    """sign(x) * |x|**(1/alpha), the inverse of :func:`power_law_compress`."""
    _check_alpha(alpha)
    if alpha == 1.0:
        return value
    return np.sign(value) * np.abs(value) ** (1.0 / alpha)


def compress_spectrogram(spec: ComplexSpectrogram, alpha: float) -> ComplexSpectrogram:
    return ComplexSpectrogram(power_law_compress(spec.real, alpha), power_law_compress(spec.imag, alpha))


def decompress_spectrogram(spec: ComplexSpectrogram, alpha: float) -> ComplexSpectrogram:
    return ComplexSpectrogram(power_law_decompress(spec.real, alpha), power_law_decompress(spec.imag, alpha))


def compressed_features(spec: ComplexSpectrogram, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude and phase of the compressed spectrogram as T x K x 1 tensors.

    Phase is the four-quadrant angle; a zero bin gets phase 0.
    """
    c = compress_spectrogram(spec, alpha)
    magnitude = np.hypot(c.real, c.imag)
    phase = np.arctan2(c.imag, c.real)
    # atan2 returns -pi for (-0.0, negative real); fold onto (-pi, pi]
    phase = np.where(phase <= -np.pi, np.pi, phase)
    return magnitude[..., None], phase[..., None]
