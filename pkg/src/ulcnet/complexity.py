"""Closed-form parameter and MAC accounting.

Conventions: one MAC per weight application; bias additions and
activations are free.  Convolution MACs include zero-padded taps (same
padding), GRUs count the input and recurrent gate matrices per step.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .config import ModelConfig, ReorientConfig


@dataclass
class LayerCost:
    name: str
    params: int
    macs_per_frame: int
    output_shape: tuple[int, ...]
    biases: int = 0


def _sep_conv(f: int, c_in: int, c_out: int, k: int) -> tuple[int, int]:
    params = (c_in * k + c_in) + (c_in * c_out + c_out)
    macs = f * c_in * k + f * c_in * c_out
    return params, macs


def _full_conv(f: int, c_in: int, c_out: int, k: int) -> tuple[int, int]:
    return c_in * c_out * k + c_out, f * c_in * c_out * k


def _gru(n_in: int, units: int, steps: int) -> tuple[int, int]:
    params = 3 * ((n_in + units) * units + 2 * units)
    macs = steps * 3 * (n_in + units) * units
    return params, macs


def _fc(n_in: int, n_out: int) -> tuple[int, int]:
    return n_in * n_out + n_out, n_in * n_out


def conv_block_costs(
    freq: int, in_channels: int, filters, kernel: int, separable: bool, prefix: str = "stage1.conv"
) -> list[LayerCost]:
    """Conv block with max-pool(2) after every layer but the first."""
    layers = []
    c_in = in_channels
    for i, c_out in enumerate(filters, start=1):
        conv = _sep_conv if separable else _full_conv
        params, macs = conv(freq, c_in, c_out, kernel)
        if i > 1:
            freq //= 2
        biases = c_in + c_out if separable else c_out
        layers.append(LayerCost(f"{prefix}{i}", params, macs, (freq, c_out), biases))
        c_in = c_out
    return layers


def layer_costs(cfg: ModelConfig | None = None) -> list[LayerCost]:
    cfg = cfg or ModelConfig()
    k = cfg.kernel[1]
    bins = cfg.stft.num_bins
    ro = cfg.reorient
    layers = conv_block_costs(ro.band_width_bins, ro.num_bands, cfg.conv_filters, k, cfg.separable)
    freq, channels = layers[-1].output_shape

    p, m = _gru(channels, cfg.fgru_units, freq)
    layers.append(LayerCost("stage1.fgru", 2 * p, 2 * m, (freq, 2 * cfg.fgru_units), 2 * 6 * cfg.fgru_units))
    p, m = _fc(2 * cfg.fgru_units, cfg.post_fgru_pointwise)
    layers.append(LayerCost("stage1.bottleneck", p, freq * m, (freq, cfg.post_fgru_pointwise), cfg.post_fgru_pointwise))

    group_in = freq * cfg.post_fgru_pointwise // cfg.num_subband_groups
    for g in range(cfg.num_subband_groups):
        n_in = group_in
        for layer in range(cfg.gru_layers_per_group):
            p, m = _gru(n_in, cfg.gru_units, 1)
            layers.append(LayerCost(f"stage1.tgru{g}.layer{layer}", p, m, (cfg.gru_units,), 6 * cfg.gru_units))
            n_in = cfg.gru_units

    p, m = _fc(cfg.num_subband_groups * cfg.gru_units, cfg.fc_neurons)
    layers.append(LayerCost("stage1.fc1", p, m, (cfg.fc_neurons,), cfg.fc_neurons))
    p, m = _fc(cfg.fc_neurons, cfg.fc_neurons)
    layers.append(LayerCost("stage1.fc2", p, m, (cfg.fc_neurons,), cfg.fc_neurons))

    p, m = _full_conv(bins, 2, cfg.stage2_filters, k)
    layers.append(LayerCost("stage2.conv1", p, m, (bins, cfg.stage2_filters), cfg.stage2_filters))
    p, m = _full_conv(bins, cfg.stage2_filters, cfg.stage2_filters, k)
    layers.append(LayerCost("stage2.conv2", p, m, (bins, cfg.stage2_filters), cfg.stage2_filters))
    p, m = _fc(cfg.stage2_filters, cfg.stage2_out_channels)
    layers.append(LayerCost("stage2.out", p, bins * m, (bins, cfg.stage2_out_channels), cfg.stage2_out_channels))
    return layers


@dataclass
class ParamReport:
    total: int
    layers: list[LayerCost]


@dataclass
class MacsReport:
    macs_per_frame: int
    frames_per_second: float
    layers: list[LayerCost]

    @property
    def macs_per_second(self) -> float:
        return self.macs_per_frame * self.frames_per_second

    @property
    def gmacs(self) -> float:
        return self.macs_per_second / 1e9


def count_params(cfg: ModelConfig | None = None) -> ParamReport:
    layers = layer_costs(cfg)
    return ParamReport(sum(layer.params for layer in layers), layers)


def count_macs(cfg: ModelConfig | None = None, frames_per_second: float | None = None) -> MacsReport:
    cfg = cfg or ModelConfig()
    fps = cfg.stft.frames_per_second if frames_per_second is None else frames_per_second
    layers = layer_costs(cfg)
    return MacsReport(sum(layer.macs_per_frame for layer in layers), fps, layers)


def conv_block_reduction_ratio(cfg: ModelConfig | None = None, frames_per_second: float | None = None) -> float:
    """MACs of a plain full-band conv block over MACs of the configured block.

    The comparator keeps filter counts, kernel and pooling but convolves the
    raw num_bins axis with one input channel and no separable factorization.
    """
    cfg = cfg or ModelConfig()
    fps = cfg.stft.frames_per_second if frames_per_second is None else frames_per_second
    k = cfg.kernel[1]
    ro: ReorientConfig = cfg.reorient
    ours = conv_block_costs(ro.band_width_bins, ro.num_bands, cfg.conv_filters, k, cfg.separable)
    plain = conv_block_costs(ro.num_bins, 1, cfg.conv_filters, k, separable=False)
    return (sum(c.macs_per_frame for c in plain) * fps) / (sum(c.macs_per_frame for c in ours) * fps)


def stage2_share(cfg: ModelConfig | None = None) -> dict[str, float]:
    """Fraction of parameters in stage 2, counted with and without biases."""
    layers = layer_costs(cfg)
    s2 = [c for c in layers if c.name.startswith("stage2.")]
    total = sum(c.params for c in layers)
    total_biases = sum(c.biases for c in layers)
    s2_params = sum(c.params for c in s2)
    s2_biases = sum(c.biases for c in s2)
    return {
        "stage2_params": s2_params,
        "with_biases": s2_params / total,
        "without_biases": (s2_params - s2_biases) / (total - total_biases),
    }


def report_dict(cfg: ModelConfig | None = None) -> dict:
    cfg = cfg or ModelConfig()
    params = count_params(cfg)
    macs = count_macs(cfg)
    return {
        "total_params": params.total,
        "macs_per_frame": macs.macs_per_frame,
        "frames_per_second": macs.frames_per_second,
        "gmacs": macs.gmacs,
        "conv_block_reduction_ratio": conv_block_reduction_ratio(cfg),
        "stage2_share": stage2_share(cfg),
        "conventions": {
            "macs": "one MAC per weight application; biases and activations excluded",
            "conv_padding": "same padding, padded taps counted",
            "gru": "3 gates x (input + recurrent) matrices per step, dual biases in params",
        },
        "layers": [
            {**asdict(c), "output_shape": list(c.output_shape),
             "gmacs": c.macs_per_frame * macs.frames_per_second / 1e9}
            for c in params.layers
        ],
    }
