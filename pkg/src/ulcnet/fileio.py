"""WAV and ULCW weight-file I/O."""

from __future__ import annotations

import math
import struct
import wave

import numpy as np

from .config import SAMPLE_RATE, ModelConfig
from .dsp import WavSignal
from .errors import WavFormatError, WeightFileError
from .model import validate_weights

MAGIC = b"ULCW"
VERSION = 1


def read_wav(path) -> WavSignal:
    """Read a 16-bit PCM mono 16 kHz WAV, scaled by 1/32768."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            nframes = w.getnframes()
            data = w.readframes(nframes)
    # corrupted chunk sizes surface from the stdlib as RuntimeError/ValueError
    except (wave.Error, EOFError, struct.error, RuntimeError, ValueError, OverflowError) as exc:
        raise WavFormatError(f"{path}: not a readable PCM WAV file ({exc})") from exc
    if channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise WavFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if rate != SAMPLE_RATE:
        raise WavFormatError(f"{path}: unsupported sample rate {rate} Hz, need {SAMPLE_RATE}")
    if len(data) != 2 * nframes:
        raise WavFormatError(f"{path}: truncated, header says {nframes} frames, found {len(data) // 2}")
    samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    return WavSignal(samples, rate)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")


def write_wav(path, signal: WavSignal) -> None:
    if signal.sample_rate != SAMPLE_RATE:
        raise WavFormatError(f"unsupported sample rate {signal.sample_rate} Hz, need {SAMPLE_RATE}")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(signal.sample_rate)
        w.writeframes(to_pcm16(signal.samples).tobytes())


def dumps_weights(weights: dict) -> bytes:
    parts = [MAGIC, struct.pack("<HI", VERSION, len(weights))]
    for name, value in weights.items():
        arr = np.ascontiguousarray(value, dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def loads_weights(blob: bytes, cfg: ModelConfig | None = None) -> dict:
    """Parse a ULCW blob; with ``cfg`` the tensors are checked against its layout."""
    view = memoryview(blob)
    pos = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise WeightFileError(f"truncated weight file while reading {what}")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(4, "magic")) != MAGIC:
        raise WeightFileError("bad magic, not a ULCW weight file")
    version, count = struct.unpack("<HI", take(6, "header"))
    if version != VERSION:
        raise WeightFileError(f"unsupported weight file version {version}")
    weights: dict = {}
    for i in range(count):
        (name_len,) = struct.unpack("<H", take(2, f"tensor {i} name length"))
        try:
            name = bytes(take(name_len, f"tensor {i} name")).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WeightFileError(f"tensor {i} name is not valid UTF-8") from exc
        (rank,) = struct.unpack("<B", take(1, f"{name} rank"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, f"{name} dims"))
        size = math.prod(dims)
        payload = take(4 * size, f"{name} payload")
        if name in weights:
            raise WeightFileError(f"duplicate tensor {name}")
        weights[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
    if pos != len(view):
        raise WeightFileError(f"{len(view) - pos} trailing bytes after last tensor")
    if cfg is not None:
        validate_weights(weights, cfg)
    return weights


def save_weights(path, weights: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_weights(weights))


def load_weights(path, cfg: ModelConfig | None = None) -> dict:
    with open(path, "rb") as fh:
        return loads_weights(fh.read(), cfg)
