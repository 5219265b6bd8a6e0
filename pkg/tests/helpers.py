"""Test signal builders and brute-force reference implementations."""

from __future__ import annotations

import numpy as np

from roomdims.audio_io import Signal, exponential_envelope

SR = 48000


def two_slope_ir(early_t60=0.8, late_t60=2.0, knee_db=-20.0, duration=3.0, seed=0) -> Signal:
    """Noise IR whose energy decays at ``early_t60`` down to ``knee_db``, then at ``late_t60``."""
    t = np.arange(int(duration * SR)) / SR
    knee_t = -knee_db / 60.0 * early_t60
    env = np.where(t < knee_t, exponential_envelope(t, early_t60),
                   exponential_envelope(knee_t, early_t60) * exponential_envelope(t - knee_t, late_t60))
    x = np.random.default_rng(seed).standard_normal(len(t)) * env
    return Signal(x / np.abs(x).max(), SR)


EXCITATION_BINS = (13, 29, 40, 57, 83, 121, 160, 203)


def bin_aligned_tone(duration=1.0, window_len=1024, bins=(40,)) -> np.ndarray:
    """Sum of steady sinusoids, each centred on an STFT bin of ``window_len``."""
    t = np.arange(int(duration * SR)) / SR
    return sum(np.sin(2 * np.pi * SR / window_len * b * t + 0.7 * b) for b in bins)


def reflection_ir(k: int, seed: int = 0, span=0.3, k_max=20) -> np.ndarray:
    """Direct sound plus the first ``k`` of ``k_max`` seeded reflections within ``span`` seconds.

    The reflection sets are nested, so a larger ``k`` only adds reflections.
    """
    rng = np.random.default_rng(seed)
    h = np.zeros(int(span * SR))
    h[0] = 1.0
    pos = rng.choice(np.arange(int(0.002 * SR), len(h)), size=k_max, replace=False)
    amp = rng.uniform(0.3, 0.7, k_max) * rng.choice([-1.0, 1.0], k_max)
    h[pos[:k]] = amp[:k]
    return h


def reverberant_tone(k: int, seed: int = 0) -> Signal:
    """Steady multi-tone heard through :func:`reflection_ir`, cut to the tone length."""
    x = bin_aligned_tone(bins=EXCITATION_BINS)
    y = np.convolve(x, reflection_ir(k, seed))[: len(x)]
    return Signal(y, SR)


def two_sines(n=60000, f1=440.0, f2=440.0 * np.sqrt(2)) -> Signal:
    t = np.arange(n) / SR
    return Signal(np.sin(2 * np.pi * f1 * t) + 0.8 * np.sin(2 * np.pi * f2 * t), SR)


def brute_force_dimension(x, delay, depth, max_points, quantiles=(0.01, 0.1), n_radii=32):
    """Correlation dimension by explicit pair loops and a plain log-log fit.

    Shares only the embedding recipe and radius grid with the library; the
    distances, correlation sums and fit are recomputed row by row.
    """
    n_vec = len(x) - (depth - 1) * delay
    idx = np.round(np.linspace(0, n_vec - 1, min(max_points, n_vec))).astype(int)
    pts = np.stack([x[idx + m * delay] for m in range(depth)], axis=1)
    n = len(pts)
    rows = []
    for i in range(n - 1):
        diff = pts[i + 1:] - pts[i]
        rows.append(np.sqrt(np.einsum("ij,ij->i", diff, diff)))
    dist = np.concatenate(rows)
    lo, hi = np.quantile(dist, quantiles)
    radii = np.exp(np.linspace(np.log(lo), np.log(hi), n_radii))
    c = np.array([2.0 * np.count_nonzero(dist <= r) / (n * n) for r in radii])
    A = np.vstack([np.log(radii), np.ones(n_radii)]).T
    slope = np.linalg.lstsq(A, np.log(c), rcond=None)[0][0]
    return float(slope)
