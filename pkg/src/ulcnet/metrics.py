"""Test-harness signal utilities: SNR mixing and SI-SDR."""

from __future__ import annotations

import numpy as np

from .dsp import WavSignal

SI_SDR_CAP_DB = 100.0


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, WavSignal) else np.asarray(x, dtype=np.float64)


def mix_at_snr(clean, noise, snr_db: float) -> WavSignal:
    """clean + g*noise with g chosen so the clean/noise energy ratio is snr_db."""
    s, n = _samples(clean), _samples(noise)
    if s.shape != n.shape:
        raise ValueError(f"clean and noise lengths differ: {s.shape} vs {n.shape}")
    e_s, e_n = float(np.dot(s, s)), float(np.dot(n, n))
    if e_s == 0.0 or e_n == 0.0:
        raise ValueError("clean and noise must both have nonzero energy")
    gain = np.sqrt(e_s / (e_n * 10.0 ** (snr_db / 10.0)))
    return WavSignal(s + gain * n)


def si_sdr(estimate, reference) -> float:
    """Scale-invariant SDR in dB, capped at +100 dB."""
    est, ref = _samples(estimate), _samples(reference)
    if est.shape != ref.shape:
        raise ValueError(f"estimate and reference lengths differ: {est.shape} vs {ref.shape}")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ValueError("reference signal has zero energy")
    target = (np.dot(est, ref) / ref_energy) * ref
    residual = est - target
    t, r = float(np.dot(target, target)), float(np.dot(residual, residual))
    if r == 0.0 or (t > 0.0 and 10.0 * np.log10(t / r) > SI_SDR_CAP_DB):
        return SI_SDR_CAP_DB
    if t == 0.0:
        return -SI_SDR_CAP_DB
    return float(10.0 * np.log10(t / r))
