"""Fourier primitives shared by the feature extractors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .audio_io import Signal

# Critical-band (Bark) edges in Hz; band B spans BARK_EDGES[B-1] .. BARK_EDGES[B].
BARK_EDGES = np.array(
    [20, 100, 200, 300, 400, 510, 630, 770, 920, 1080, 1270, 1480, 1720,
     2000, 2320, 2700, 3150, 3700, 4400, 5300, 6400, 7700, 9500, 12000, 15500],
    dtype=float,
)
N_BARK = 24

# 20 uPa re. 1.0 full scale = 1 Pa, i.e. full-scale RMS reads as ~94 dB SPL.
DEFAULT_A_REF = 2e-5


class SilentInputError(ValueError):
    """Raised when an operation needs a non-zero spectrum or signal."""


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum.

    ``mags`` are amplitude-calibrated: a sinusoid of peak amplitude ``a`` on
    an exact bin reads ``a`` in that bin (DC and Nyquist read their plain
    mean value). ``n_fft`` is the transform length, needed to tell whether
    the last bin is the Nyquist bin.
    """

    freqs: np.ndarray
    mags: np.ndarray
    phases: np.ndarray | None = None
    n_fft: int | None = None

    def __post_init__(self):
        if len(self.freqs) != len(self.mags):
            raise ValueError("freqs and mags differ in length")
        if self.phases is not None and len(self.phases) != len(self.mags):
            raise ValueError("phases and mags differ in length")
        if len(self.freqs) and self.freqs[0] < 0:
            raise ValueError("frequencies must be non-negative")
        if np.any(self.mags < 0):
            raise ValueError("magnitudes must be non-negative")

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 else 0.0

    def power(self) -> np.ndarray:
        """Mean-square contribution of each bin (sums to the signal's mean square)."""
        p = 0.5 * self.mags**2
        if len(p) and self.freqs[0] == 0:
            p[0] = self.mags[0] ** 2
        if self.n_fft is not None and self.n_fft % 2 == 0 and len(p) == self.n_fft // 2 + 1:
            p[-1] = self.mags[-1] ** 2
        return p


@dataclass(frozen=True)
class PartialList:
    freqs: np.ndarray
    amps: np.ndarray

    def __len__(self):
        return len(self.freqs)


@dataclass(frozen=True)
class Spectrogram:
    """Hann-windowed short-time spectra, frames along axis 0.

    Magnitudes use the same amplitude calibration as :class:`Spectrum`,
    normalised by the window sum.
    """

    freqs: np.ndarray
    mags: np.ndarray
    phases: np.ndarray
    hop: float
    window_len: int
    hop_len: int
    sample_rate: int
    window: str = "hann"

    def __len__(self):
        return self.mags.shape[0]

    def frame(self, index: int) -> Spectrum:
        return Spectrum(self.freqs, self.mags[index], self.phases[index], self.window_len)

    @property
    def frames(self) -> list[Spectrum]:
        return [self.frame(i) for i in range(len(self))]

    def energy(self) -> float:
        """Estimate of the analysed signal's total energy (sum of squares).

        Per-frame energy follows from Parseval; the sum over frames is divided
        by the overlap gain ``sum(w**2) / hop_len``.
        """
        w = get_window(self.window, self.window_len)
        frame_power = sum(self.frame(i).power().sum() for i in range(len(self)))
        frame_energy = frame_power * w.sum() ** 2 / self.window_len
        return float(frame_energy / (np.sum(w**2) / self.hop_len))


@dataclass(frozen=True)
class BarkBands:
    """Per-critical-band energy (mean square) and level, bands 1..24."""

    band_level: np.ndarray
    band_energy: np.ndarray

    def __post_init__(self):
        if len(self.band_level) != N_BARK or len(self.band_energy) != N_BARK:
            raise ValueError("exactly 24 Bark bands required")
        if np.any(self.band_level < 0) or np.any(self.band_energy < 0):
            raise ValueError("band values must be non-negative")


def _calibrated(X: np.ndarray, n_fft: int, norm: float) -> np.ndarray:
    mags = 2.0 * np.abs(X) / norm
    mags[0] *= 0.5
    if n_fft % 2 == 0:
        mags[-1] *= 0.5
    return mags


def magnitude_spectrum(signal: Signal) -> Spectrum:
    """Rectangular-window one-sided spectrum of the whole mono signal."""
    x = signal.mono()
    n = len(x)
    if n == 0:
        raise ValueError("empty input")
    X = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(n, 1.0 / signal.sample_rate)
    return Spectrum(freqs, _calibrated(X, n, n), np.angle(X), n)


def stft(signal: Signal, window_len: int = 1024, hop: int = 512) -> Spectrogram:
    """Hann-windowed short-time Fourier transform with retained phases.

    Produces ``(N - window_len) // hop + 1`` frames; no padding is applied.
    """
    if window_len < 16:
        raise ValueError("window_len must be at least 16")
    if not 0 < hop <= window_len:
        raise ValueError("hop must satisfy 0 < hop <= window_len")
    x = signal.mono()
    if len(x) < window_len:
        raise ValueError("signal shorter than one window")
    n_frames = (len(x) - window_len) // hop + 1
    w = get_window("hann", window_len)
    idx = np.arange(window_len)[None, :] + hop * np.arange(n_frames)[:, None]
    X = np.fft.rfft(x[idx] * w, axis=1)
    freqs = np.fft.rfftfreq(window_len, 1.0 / signal.sample_rate)
    mags = 2.0 * np.abs(X) / w.sum()
    mags[:, 0] *= 0.5
    if window_len % 2 == 0:
        mags[:, -1] *= 0.5
    return Spectrogram(
        freqs=freqs,
        mags=mags,
        phases=np.angle(X),
        hop=hop / signal.sample_rate,
        window_len=window_len,
        hop_len=hop,
        sample_rate=signal.sample_rate,
    )


def local_maxima(levels: np.ndarray) -> np.ndarray:
    """Indices with ``levels[i-1] < levels[i] >= levels[i+1]`` (edges excluded)."""
    L = np.asarray(levels)
    if len(L) < 3:
        return np.array([], dtype=int)
    mid = L[1:-1]
    return np.nonzero((L[:-2] < mid) & (mid >= L[2:]))[0] + 1


def extract_partials(
    spectrum: Spectrum, threshold_rel: float = 1e-4, max_partials: int = 256
) -> PartialList:
    """Dominant spectral lines, strongest first.

    A line is a local maximum (strict on the left, weak on the right) whose
    magnitude is at least ``threshold_rel`` times the spectrum maximum.
    """
    mags = spectrum.mags
    peak = mags.max() if len(mags) else 0.0
    if not peak > 0:
        raise SilentInputError("silent input")
    idx = local_maxima(mags)
    idx = idx[mags[idx] >= threshold_rel * peak]
    order = np.argsort(-mags[idx], kind="stable")[:max_partials]
    idx = idx[order]
    return PartialList(spectrum.freqs[idx].copy(), mags[idx].copy())


def bark_band_of(freqs: np.ndarray) -> np.ndarray:
    """Band number 1..24 for each frequency, 0 outside 20 Hz .. 15.5 kHz."""
    f = np.asarray(freqs, dtype=float)
    band = np.searchsorted(BARK_EDGES, f, side="right")
    band[(f < BARK_EDGES[0]) | (f >= BARK_EDGES[-1])] = 0
    return band


def bark_band_levels(spectrum: Spectrum, a_ref: float = DEFAULT_A_REF) -> BarkBands:
    """Integrate spectral power into the 24 critical bands.

    Each level is ``10*log10(energy / a_ref**2)`` floored at 0, so content
    below the reference (hearing threshold) contributes nothing. Bins above
    the Nyquist range of the signal are simply absent.
    """
    band = bark_band_of(spectrum.freqs)
    energy = np.bincount(band, weights=spectrum.power(), minlength=N_BARK + 1)[1:]
    with np.errstate(divide="ignore"):
        level = 10.0 * np.log10(energy / a_ref**2)
    level = np.where(np.isfinite(level), np.maximum(level, 0.0), 0.0)
    return BarkBands(band_level=level, band_energy=energy)


def bark(f) -> np.ndarray:
    """Critical-band rate in Bark (Zwicker & Terhardt approximation)."""
    f = np.asarray(f, dtype=float)
    return 13.0 * np.arctan(0.00076 * f) + 3.5 * np.arctan((f / 7500.0) ** 2)


def critical_bandwidth(f) -> np.ndarray:
    """Critical bandwidth in Hz around centre frequency ``f``."""
    f = np.asarray(f, dtype=float)
    return 25.0 + 75.0 * (1.0 + 1.4 * (f / 1000.0) ** 2) ** 0.69
