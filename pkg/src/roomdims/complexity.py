"""Fractal correlation dimension and echo density."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .audio_io import Signal
from .spectral import stft


@dataclass(frozen=True)
class EmbeddingConfig:
    """Delay-embedding settings.

    ``delay=None`` selects the first zero crossing of the autocorrelation
    (at least 3 samples). ``radius_quantiles`` bound the scaling region as
    quantiles of the pairwise-distance distribution.
    """

    delay: int | None = None
    depth: int = 10
    max_points: int = 5000
    radius_quantiles: tuple[float, float] = (0.01, 0.1)
    n_radii: int = 32
    max_slope_std: float = 0.3

    def __post_init__(self):
        if self.delay is not None and self.delay < 3:
            raise ValueError("delay must be >= 3 samples")
        if self.depth < 2:
            raise ValueError("depth must be >= 2")
        lo, hi = self.radius_quantiles
        if not 0 < lo < hi < 1:
            raise ValueError("radius quantiles must satisfy 0 < lo < hi < 1")


@dataclass
class CorrelationFit:
    dimension: float
    radii: np.ndarray
    c: np.ndarray
    fit_range: tuple[int, int]
    local_slopes: np.ndarray = field(repr=False)
    stable: bool = True


def autocorrelation_delay(x: np.ndarray, min_delay: int = 3) -> int:
    """First zero crossing of the autocorrelation, clamped to ``min_delay``."""
    x = x - x.mean()
    n = len(x)
    n_fft = 1 << (2 * n - 1).bit_length()
    X = np.fft.rfft(x, n_fft)
    ac = np.fft.irfft(X * np.conj(X), n_fft)[:n]
    below = np.nonzero(ac <= 0)[0]
    lag = int(below[0]) if len(below) else min_delay
    return max(lag, min_delay)


def delay_vectors(x: np.ndarray, delay: int, depth: int, max_points: int | None = None) -> np.ndarray:
    """Rows ``(x[i], x[i+delay], ..., x[i+(depth-1)*delay])``, uniformly thinned."""
    n = len(x) - (depth - 1) * delay
    if n <= 0:
        raise ValueError("signal too short for the embedding")
    idx = np.arange(n)
    if max_points is not None and n > max_points:
        idx = np.round(np.linspace(0, n - 1, max_points)).astype(int)
    return x[idx[:, None] + delay * np.arange(depth)[None, :]]


def correlation_integral(points: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Fraction of ordered pairs (i != j) closer than or equal to each radius."""
    n = len(points)
    d = np.sort(pdist(points))
    counts = np.searchsorted(d, radii, side="right")
    return 2.0 * counts / (n * n)


def _stable_run(slopes: np.ndarray, tol: float) -> tuple[int, int]:
    """Widest run of consecutive local slopes within ``tol`` of the run median."""
    best = (0, 1)
    n = len(slopes)
    for i in range(n):
        for j in range(n, i, -1):
            if j - i <= best[1] - best[0]:
                break
            seg = slopes[i:j]
            if np.all(np.abs(seg - np.median(seg)) <= tol):
                best = (i, j)
                break
    return best


def fit_scaling_region(radii: np.ndarray, c: np.ndarray, max_slope_std: float = 0.3):
    """Least-squares slope of log C(r) against log r.

    If the local slopes scatter more than ``max_slope_std`` the fit is
    restricted to the widest stable sub-range. Returns
    ``(slope, (i0, i1), local_slopes, stable)`` with the fit over
    ``radii[i0:i1]``.
    """
    lr, lc = np.log(radii), np.log(c)
    local = np.diff(lc) / np.diff(lr)
    i0, i1 = 0, len(radii)
    stable = bool(np.std(local) <= max_slope_std)
    if not stable:
        a, b = _stable_run(local, max_slope_std)
        i0, i1 = a, b + 1
    slope = np.polyfit(lr[i0:i1], lc[i0:i1], 1)[0]
    return float(slope), (i0, i1), local, stable


def correlation_fit(signal: Signal, cfg: EmbeddingConfig = EmbeddingConfig()) -> CorrelationFit:
    x = signal.mono()
    if np.ptp(x) == 0:
        raise ValueError("zero variance")
    delay = cfg.delay or autocorrelation_delay(x)
    pts = delay_vectors(x, delay, cfg.depth, cfg.max_points)
    if len(pts) < 1000:
        raise ValueError(f"too few points: {len(pts)} delay vectors, need 1000")
    d = np.sort(pdist(pts))
    if d[-1] == 0:
        raise ValueError("zero variance")
    lo, hi = np.quantile(d, cfg.radius_quantiles)
    lo = max(lo, d[d > 0][0]) if np.any(d > 0) else lo
    radii = np.geomspace(lo, hi, cfg.n_radii)
    n = len(pts)
    c = 2.0 * np.searchsorted(d, radii, side="right") / (n * n)
    slope, rng, local, stable = fit_scaling_region(radii, c, cfg.max_slope_std)
    return CorrelationFit(slope, radii, c, rng, local, stable)


def correlation_dimension(signal: Signal, cfg: EmbeddingConfig = EmbeddingConfig()) -> float:
    """Correlation dimension of a delay embedding of ``signal``."""
    return correlation_fit(signal, cfg).dimension


PHASE_FLOOR_REL = 1e-9


def echo_density_map(signal: Signal, window_len: int = 1024, hop: int = 512,
                     floor_rel: float = PHASE_FLOOR_REL):
    """Per-cell echo density and amplitude weights, frames 1..T-2.

    The second difference of each bin's phase along time is taken modulo
    2*pi into (-pi, pi], which is what unwrapping achieves, but without
    deciding a branch for every single increment: with ``hop`` equal to half
    the window, increments of exactly +-pi are common and their branch would
    otherwise hinge on rounding. The echo density of a cell is
    ``|A| * |wrapped second difference| / (2*pi)``, differences per frame step.

    A phase is only meaningful where the bin holds more than rounding noise,
    so cells whose three frames do not all exceed ``floor_rel`` times the
    largest magnitude get zero density.
    """
    spec = stft(signal, window_len, hop)
    if len(spec) < 3:
        raise ValueError("fewer than 3 STFT frames")
    d2 = np.abs(np.angle(np.exp(1j * np.diff(spec.phases, n=2, axis=0))))
    defined = spec.mags > floor_rel * spec.mags.max()
    d2[~(defined[:-2] & defined[1:-1] & defined[2:])] = 0.0
    amp = spec.mags[1:-1]
    return amp * d2 / (2.0 * math.pi), amp


def echo_density(signal: Signal, window_len: int = 1024, hop: int = 512) -> float:
    """Amplitude-normalised sum of phase-curvature over the time-frequency plane."""
    e, amp = echo_density_map(signal, window_len, hop)
    total = amp.sum()
    if not total > 0:
        return 0.0
    return float(e.sum() / total)
