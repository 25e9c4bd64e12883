"""Frame-by-frame streaming engine.

Each call consumes one hop (256 samples) and returns one hop.  Output index
``m`` carries the enhanced input sample ``m - window_len``: 256 samples of
block buffering plus 256 samples of overlap-add.
"""

from __future__ import annotations

import time

import numpy as np

from .config import SAMPLE_RATE, ModelConfig
from .dsp import ComplexSpectrogram
from .errors import ContractError
from .model import _enhance, prepare, zero_hidden


class StreamState:
    def __init__(self, weights, cfg: ModelConfig | None = None):
        self.cfg = cfg or ModelConfig()
        self.weights = prepare(weights, self.cfg)
        win = self.cfg.stft.window_len_samples
        self.analysis = np.zeros(win)
        # first hop: finished samples awaiting output; second hop: partial overlap-add tail
        self.synthesis = np.zeros(win)
        self.hidden = zero_hidden(self.cfg)
        self.frames_processed = 0

    @property
    def hop(self) -> int:
        return self.cfg.stft.hop_samples

    @property
    def latency_samples(self) -> int:
        return self.cfg.stft.window_len_samples

    def state_size(self) -> int:
        """Number of floats of mutable state."""
        return self.analysis.size + self.synthesis.size + sum(h.size for g in self.hidden for h in g)

    def reset(self) -> None:
        self.analysis[:] = 0.0
        self.synthesis[:] = 0.0
        for group in self.hidden:
            for h in group:
                h[:] = 0.0
        self.frames_processed = 0

    def process_chunk(self, samples) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        hop = self.hop
        if samples.shape != (hop,):
            raise ContractError(f"process_chunk expects exactly {hop} samples, got {samples.shape}")
        stft_cfg = self.cfg.stft
        win = stft_cfg.window_len_samples

        self.analysis[:-hop] = self.analysis[hop:]
        self.analysis[-hop:] = samples
        frame = np.fft.rfft(self.analysis * stft_cfg.window, n=stft_cfg.fft_len)
        spec = ComplexSpectrogram(frame.real[None, :], frame.imag[None, :])
        enhanced, hidden = _enhance(spec, self.weights, self.cfg, self.hidden)
        for group, new in zip(self.hidden, hidden):
            for h, n in zip(group, new):
                h[:] = n
        seg = np.fft.irfft(enhanced.to_complex()[0], n=stft_cfg.fft_len)[:win] * stft_cfg.window

        out = self.synthesis[:hop].copy()
        self.synthesis[: win - hop] = self.synthesis[hop:]
        self.synthesis[win - hop :] = 0.0
        self.synthesis += seg
        self.frames_processed += 1
        return out


def create_stream(weights, cfg: ModelConfig | None = None) -> StreamState:
    return StreamState(weights, cfg)


def process_chunk(state: StreamState, samples) -> np.ndarray:
    return state.process_chunk(samples)


def reset(state: StreamState) -> None:
    state.reset()


def stream_signal(state: StreamState, samples: np.ndarray, flush: bool = True) -> np.ndarray:
    """Push a whole signal through a stream and undo the latency.

    The result is aligned with (and as long as) the input, which makes it
    directly comparable with offline enhancement.
    """
    hop = state.hop
    n = len(samples)
    extra = state.latency_samples if flush else 0
    total = -(-(n + extra) // hop) * hop
    padded = np.zeros(total)
    padded[:n] = samples
    out = np.concatenate([state.process_chunk(padded[i : i + hop]) for i in range(0, total, hop)])
    return out[state.latency_samples : state.latency_samples + n] if flush else out


def synthetic_audio(duration_s: float, content: str = "noise", seed: int = 0) -> np.ndarray:
    n = int(round(duration_s * SAMPLE_RATE))
    if content == "silence":
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    return 0.1 * rng.standard_normal(n)


def benchmark(weights, cfg: ModelConfig | None = None, duration_s: float = 10.0, content: str = "noise") -> dict:
    """Stream synthetic audio on one thread; returns RTF and per-frame wall times."""
    from threadpoolctl import threadpool_limits

    if duration_s < 1.0:
        raise ValueError("RTF measurement needs at least 1 s of audio")
    state = StreamState(weights, cfg)
    audio = synthetic_audio(duration_s, content)
    hop = state.hop
    chunks = [audio[i : i + hop] for i in range(0, len(audio) - hop + 1, hop)]
    frame_times = np.empty(len(chunks))
    clock = time.perf_counter
    with threadpool_limits(limits=1):
        start = clock()
        for i, chunk in enumerate(chunks):
            t0 = clock()
            state.process_chunk(chunk)
            frame_times[i] = clock() - t0
        elapsed = clock() - start
    audio_s = len(chunks) * hop / SAMPLE_RATE
    return {
        "rtf": elapsed / audio_s,
        "audio_seconds": audio_s,
        "elapsed_seconds": elapsed,
        "frames": len(chunks),
        "frame_budget_ms": 1000.0 * hop / SAMPLE_RATE,
        "frame_times_ms": frame_times * 1000.0,
    }


def measure_rtf(weights, cfg: ModelConfig | None = None, duration_s: float = 10.0, content: str = "noise") -> float:
    """Wall-clock streaming time divided by audio duration, single-threaded."""
    return benchmark(weights, cfg, duration_s, content)["rtf"]
