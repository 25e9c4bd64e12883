"""Low-complexity two-stage speech enhancement: DSP, network, streaming engine
and complexity accounting."""

from .config import ModelConfig, ReorientConfig, StftConfig
from .dsp import ComplexSpectrogram, WavSignal, istft, stft
from .model import enhance_signal, enhance_spectrogram
from .nn import init_weights
from .stream import StreamState, create_stream

__all__ = [
    "ComplexSpectrogram",
    "ModelConfig",
    "ReorientConfig",
    "StftConfig",
    "StreamState",
    "WavSignal",
    "create_stream",
    "enhance_signal",
    "enhance_spectrogram",
    "init_weights",
    "istft",
    "stft",
]

__version__ = "0.1.0"
