"""Channelwise feature reorientation.

The frequency axis is cut into overlapping fixed-width bands which are then
stacked along the channel axis, so the conv block slides over 48 bins
instead of 257.
"""

from __future__ import annotations

import numpy as np

from .config import ReorientConfig
from .errors import DimensionError


def band_index_map(cfg: ReorientConfig) -> np.ndarray:
    """(band_width, num_bands) array of global bin indices; may exceed num_bins."""
    local = np.arange(cfg.band_width_bins)[:, None]
    starts = np.arange(cfg.num_bands)[None, :] * cfg.hop_bins
    return local + starts


def reorient(features: np.ndarray, cfg: ReorientConfig | None = None) -> np.ndarray:
    """Map T x num_bins x 1 features to T x band_width x num_bands.

    Bins past the end of the spectrum read as zero.
    """
    cfg = cfg or ReorientConfig()
    if features.ndim != 3 or features.shape[1:] != (cfg.num_bins, 1):
        raise DimensionError(
            f"reorient expects (T, {cfg.num_bins}, 1) features, got {features.shape}"
        )
    padded = np.zeros((features.shape[0], cfg.padded_bins), dtype=features.dtype)
    padded[:, : cfg.num_bins] = features[:, :, 0]
    return padded[:, band_index_map(cfg)]


def band_coverage(cfg: ReorientConfig | None = None) -> np.ndarray:
    """How many bands contain each global bin 0..num_bins-1."""
    cfg = cfg or ReorientConfig()
    idx = band_index_map(cfg).ravel()
    return np.bincount(idx[idx < cfg.num_bins], minlength=cfg.num_bins)
