"""Stimulus-side (psycho)acoustic features of auralized music.

All extractors work on one channel; :func:`channel_mean` lifts them to
binaural signals by averaging the per-channel values.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .audio_io import Signal
from .spectral import (
    BARK_EDGES,
    DEFAULT_A_REF,
    N_BARK,
    BarkBands,
    PartialList,
    SilentInputError,
    Spectrum,
    bark,
    bark_band_of,
    local_maxima,
    magnitude_spectrum,
)

HELMHOLTZ_FR = 33.0
LOUDNESS_FLOOR_DB = -120.0


def channel_mean(fn, signal: Signal, *args, **kwargs) -> float:
    """Apply a mono feature to each channel of ``signal`` and average."""
    return float(np.mean([fn(signal.channel(c), *args, **kwargs) for c in range(signal.channels)]))


# -- spectral centroid ------------------------------------------------------

def spectral_centroid(spectrum: Spectrum) -> float:
    """Amplitude-weighted mean frequency in Hz."""
    total = spectrum.mags.sum()
    if not total > 0:
        raise SilentInputError("silent input")
    return float(np.dot(spectrum.freqs, spectrum.mags) / total)


# -- roughness, beating-partials model --------------------------------------

def pair_roughness(a1: float, a2: float, df: float, f_r: float = HELMHOLTZ_FR) -> float:
    """Roughness of two partials; peaks at ``a1 * a2`` when ``|df| == f_r``."""
    adf = abs(df)
    return a1 * a2 * (adf / (f_r * math.exp(-1.0))) * math.exp(-adf / f_r)


def roughness_hb(partials: PartialList, f_r: float = HELMHOLTZ_FR) -> float:
    """Sum of :func:`pair_roughness` over every unordered pair of partials.

    Pairs are accumulated in input order (i < j), so the result is
    reproducible to the last bit for a given partial list.
    """
    f = [float(v) for v in partials.freqs]
    a = [float(v) for v in partials.amps]
    total = 0.0
    for i in range(len(f)):
        for j in range(i + 1, len(f)):
            total += pair_roughness(a[i], a[j], f[j] - f[i], f_r)
    return total


# -- modulation-based roughness and fluctuation strength --------------------

ROUGHNESS_MOD_RANGE = (20.0, 170.0)
ROUGHNESS_MOD_PEAK = 70.0
FLUCTUATION_MOD_RANGE = (0.25, 20.0)
FLUCTUATION_MOD_PEAK = 4.0


def modulation_weight(fm, peak: float, lo: float, hi: float, width_oct: float) -> np.ndarray:
    """Band-pass weighting of modulation frequency: log-Gaussian around ``peak``."""
    fm = np.asarray(fm, dtype=float)
    w = np.zeros_like(fm)
    inside = (fm >= lo) & (fm <= hi)
    w[inside] = np.exp(-0.5 * (np.log2(fm[inside] / peak) / width_oct) ** 2)
    return w


def roughness_weight(fm) -> np.ndarray:
    return modulation_weight(fm, ROUGHNESS_MOD_PEAK, *ROUGHNESS_MOD_RANGE, width_oct=0.75)


def fluctuation_weight(fm) -> np.ndarray:
    return modulation_weight(fm, FLUCTUATION_MOD_PEAK, *FLUCTUATION_MOD_RANGE, width_oct=1.0)


ENVELOPE_FILTER_HALFWIDTH = 1.5  # Bark


def band_envelopes(x: np.ndarray, sample_rate: int,
                   halfwidth: float = ENVELOPE_FILTER_HALFWIDTH) -> tuple[np.ndarray, np.ndarray]:
    """Hilbert envelopes of ``x`` seen through one auditory filter per Bark band.

    Each filter is triangular on the Bark scale, centred on its band and
    ``halfwidth`` Bark to either side, so neighbouring filters overlap and
    modulation sidebands outside the band of the carrier still reach it.
    Returns ``(envelopes, band_energy)`` with envelopes of shape (24, N).
    """
    n = len(x)
    X = np.fft.fft(x)
    freqs = np.fft.fftfreq(n, 1.0 / sample_rate)
    positive = np.nonzero(freqs > 0)[0]
    z = bark(freqs[positive])
    edges = bark(BARK_EDGES)
    centres = 0.5 * (edges[:-1] + edges[1:])
    env = np.zeros((N_BARK, n))
    energy = np.zeros(N_BARK)
    for b in range(N_BARK):
        gain = 1.0 - np.abs(z - centres[b]) / halfwidth
        sel = gain > 0
        if not np.any(sel):
            continue
        Z = np.zeros(n, dtype=complex)
        Z[positive[sel]] = 2.0 * gain[sel] * X[positive[sel]]
        env[b] = np.abs(np.fft.ifft(Z))
        energy[b] = np.mean(env[b] ** 2) / 2.0
    return env, energy


def _modulation_strength(x: np.ndarray, sample_rate: int, *weights) -> list[float]:
    """Energy-weighted quadratic mean over bands of the weighted modulation depth.

    One value per modulation weighting; the band envelopes and their
    spectra are computed once and shared.
    """
    env, energy = band_envelopes(x, sample_rate)
    total = energy.sum()
    if not total > 0:
        return [0.0] * len(weights)
    n = env.shape[1]
    E = np.fft.rfft(env, axis=1)
    fm = np.fft.rfftfreq(n, 1.0 / sample_rate)
    mean = E[:, 0].real / n
    amp = 2.0 * np.abs(E) / n
    out = []
    for weight in weights:
        depth = np.sqrt(np.sum((weight(fm) * amp) ** 2, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            depth = np.where(mean > 0, depth / mean, 0.0)
        out.append(float(np.sqrt(np.sum(energy / total * depth**2))))
    return out


def am_tone(
    carrier: float,
    mod_freq: float,
    depth: float,
    level_db: float,
    duration: float,
    sample_rate: int = 48000,
    a_ref: float = DEFAULT_A_REF,
) -> Signal:
    """Amplitude-modulated sine whose unmodulated carrier has ``level_db`` SPL."""
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    peak = a_ref * 10 ** (level_db / 20.0) * math.sqrt(2.0)
    x = peak * (1.0 + depth * np.cos(2 * np.pi * mod_freq * t)) * np.sin(2 * np.pi * carrier * t)
    return Signal(x, sample_rate)


@lru_cache(maxsize=None)
def _roughness_reference() -> float:
    ref = am_tone(1000.0, 70.0, 1.0, 60.0, 1.0)
    return _modulation_strength(ref.mono(), ref.sample_rate, roughness_weight)[0]


@lru_cache(maxsize=None)
def _fluctuation_reference() -> float:
    ref = am_tone(1000.0, 4.0, 1.0, 60.0, 2.0)
    return _modulation_strength(ref.mono(), ref.sample_rate, fluctuation_weight)[0]


def roughness_sottek(signal: Signal) -> float:
    """Modulation-based roughness; 1 kHz / 60 dB / 100 % AM at 70 Hz reads 1.0."""
    if signal.duration < 0.5:
        raise ValueError("signal too short for roughness (need >= 0.5 s)")
    raw = _modulation_strength(signal.mono(), signal.sample_rate, roughness_weight)[0]
    return raw / _roughness_reference()


def fluctuation_strength(signal: Signal) -> float:
    """Slow-modulation analogue of :func:`roughness_sottek`, 4 Hz AM reads 1.0."""
    if signal.duration < 2.0:
        raise ValueError("signal too short for fluctuation strength (need >= 2 s)")
    raw = _modulation_strength(signal.mono(), signal.sample_rate, fluctuation_weight)[0]
    return raw / _fluctuation_reference()


def modulation_features(signal: Signal) -> tuple[float, float]:
    """``(roughness_sottek(signal), fluctuation_strength(signal))`` from one envelope pass."""
    if signal.duration < 2.0:
        raise ValueError("signal too short for fluctuation strength (need >= 2 s)")
    r, f = _modulation_strength(signal.mono(), signal.sample_rate,
                                roughness_weight, fluctuation_weight)
    return r / _roughness_reference(), f / _fluctuation_reference()


# -- sharpness and loudness -------------------------------------------------

def sharpness_weight(band) -> np.ndarray:
    band = np.asarray(band, dtype=float)
    return np.where(band < 15, 1.0, 0.066 * np.exp(0.171 * band))


def sharpness(bands: BarkBands, weighting: str = "level") -> float:
    """Weighted mean band number scaled to acum.

    ``weighting`` selects what plays the role of the band loudness:
    ``"level"`` (dB-like band level) or ``"energy"`` (band mean square).
    """
    L = bands.band_level if weighting == "level" else bands.band_energy
    total = L.sum()
    if not total > 0:
        raise SilentInputError("silent input")
    B = np.arange(1, N_BARK + 1)
    return float(0.11 * np.sum(L * sharpness_weight(B) * B) / total)


def loudness(
    signal: Signal,
    a_ref: float = DEFAULT_A_REF,
    mode: str = "rms",
    floor_db: float = LOUDNESS_FLOOR_DB,
) -> float:
    """Decibel level of the signal relative to ``a_ref``.

    ``mode="rms"`` gives ``20*log10(rms / a_ref)``; ``mode="literal"`` keeps
    the 1/N outside the root, which makes the value depend on duration.
    Stereo input is reduced to the mean of the per-channel values.
    """
    if signal.channels > 1:
        return channel_mean(loudness, signal, a_ref=a_ref, mode=mode, floor_db=floor_db)
    x = signal.mono() / a_ref
    n = len(x)
    if mode == "rms":
        value = math.sqrt(float(np.dot(x, x)) / n)
    elif mode == "literal":
        value = math.sqrt(float(np.dot(x, x))) / n
    else:
        raise ValueError(f"unknown loudness mode {mode!r}")
    if value == 0.0:
        return floor_db
    return max(20.0 * math.log10(value), floor_db)


# -- tonality -----------------------------------------------------------------

NEIGHBOURS = {
    "printed": (-1, -2, 1, 3),
    "terhardt": (-3, -2, 2, 3),
}
TONAL_EXCESS_DB = 7.0


def hearing_threshold(f) -> np.ndarray:
    """Threshold in quiet, dB SPL (Terhardt's approximation)."""
    k = np.maximum(np.asarray(f, dtype=float), 20.0) / 1000.0
    return 3.64 * k**-0.8 - 6.5 * np.exp(-0.6 * (k - 3.3) ** 2) + 1e-3 * k**4


def _db(p, ref):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(p, dtype=float) / ref)


def _w_bandwidth(dz):
    return (0.13 / (np.asarray(dz) + 0.13)) ** (1 / 0.29)


def _w_level(dl):
    dl = np.maximum(np.asarray(dl, dtype=float), 0.0)
    return (1.0 - np.exp(-dl / 15.0)) ** (1 / 0.29)


def _w_frequency(f):
    k = np.asarray(f, dtype=float) / 700.0
    return (1.0 / np.sqrt(1.0 + 0.2 * (k + 1.0 / k) ** 2)) ** (1 / 0.29)


def _band_loudness(power: np.ndarray, band: np.ndarray, a_ref: float) -> float:
    e = np.bincount(band, weights=power, minlength=N_BARK + 1)[1:] / a_ref**2
    return float(np.sum(np.maximum(e, 1.0) ** 0.23 - 1.0))


def _tonal_lines(L: np.ndarray, usable: np.ndarray, neighbours) -> np.ndarray:
    """Local maxima that exceed the listed neighbours by >= 7 dB."""
    idx = local_maxima(L)
    idx = idx[usable[idx]]
    pad = 3
    Lp = np.concatenate([np.full(pad, -np.inf), L, np.full(pad, -np.inf)])
    ok = np.ones(len(idx), dtype=bool)
    for j in neighbours:
        ok &= L[idx] - Lp[idx + pad + j] >= TONAL_EXCESS_DB
    return idx[ok]


def _narrowband_components(freqs, noise_power, z, usable, a_ref):
    """Sub-critical-band noise humps standing >= 7 dB above both neighbour bands.

    Returns a list of ``(freq, power, bandwidth_bark, (lo, hi))`` and the bin
    index ranges to strip from the noise spectrum.
    """
    p = np.where(usable, noise_power, 0.0)
    csum = np.concatenate([[0.0], np.cumsum(p)])

    def window(lo, hi):
        a = np.searchsorted(z, lo, side="left")
        b = np.searchsorted(z, hi, side="right")
        return csum[b] - csum[a], a, b

    e_c, lo_c, hi_c = window(z - 0.5, z + 0.5)
    e_lo, _, _ = window(z - 1.5, z - 0.5 - 1e-12)
    e_hi, _, _ = window(z + 0.5 + 1e-12, z + 1.5)
    thr = 10 ** (hearing_threshold(freqs) / 10.0) * a_ref**2
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = (
            usable
            & (e_c > thr)
            & (_db(e_c, 1.0) - _db(e_lo, 1.0) >= TONAL_EXCESS_DB)
            & (_db(e_c, 1.0) - _db(e_hi, 1.0) >= TONAL_EXCESS_DB)
            & (z >= 1.5)
            & (z <= z[usable].max() - 1.5 if np.any(usable) else False)
        )
    comps = []
    taken = np.zeros(len(p), dtype=bool)
    for i in np.argsort(-np.where(cand, e_c, -np.inf)):
        if not cand[i]:
            break
        a, b = lo_c[i], hi_c[i]
        if taken[a:b].any():
            continue
        seg_p, seg_f = p[a:b], freqs[a:b]
        fc = np.dot(seg_p, seg_f) / seg_p.sum()
        bw = math.sqrt(12.0 * np.dot(seg_p, (seg_f - fc) ** 2) / seg_p.sum())
        cb = 25.0 + 75.0 * (1.0 + 1.4 * (fc / 1000.0) ** 2) ** 0.69
        if bw >= cb:
            continue
        dz = float(bark(fc + bw / 2) - bark(max(fc - bw / 2, 0.0)))
        comps.append((fc, float(seg_p.sum()), dz, (a, b)))
        taken[a:b] = True
    return comps


def tonality_raw(
    spectrum: Spectrum, a_ref: float = DEFAULT_A_REF, neighbours: str = "printed"
) -> float:
    """Uncalibrated tonality; see :func:`tonality`."""
    freqs = spectrum.freqs
    power = spectrum.power()
    if not power.sum() > 0:
        return 0.0
    L = _db(power, a_ref**2)
    usable = (freqs >= BARK_EDGES[0]) & (freqs < BARK_EDGES[-1])
    z = bark(freqs)

    # spectral lines: seven-bin groups around each confirmed peak
    lines = _tonal_lines(L, usable, NEIGHBOURS[neighbours])
    noise = power.copy()
    tone_f, tone_p, tone_dz = [], [], []
    for i in lines:
        a, b = max(i - 3, 0), min(i + 4, len(power))
        tone_f.append(freqs[i])
        tone_p.append(power[a:b].sum())
        tone_dz.append(0.0)
        noise[a:b] = 0.0

    # narrow-band noise components
    for fc, pw, dz, (a, b) in _narrowband_components(freqs, noise, z, usable, a_ref):
        tone_f.append(fc)
        tone_p.append(pw)
        tone_dz.append(dz)
        noise[a:b] = 0.0

    band = bark_band_of(freqs)
    n_total = _band_loudness(np.where(usable, power, 0.0), band, a_ref)
    n_noise = _band_loudness(np.where(usable, noise, 0.0), band, a_ref)
    if not tone_f or n_total <= 0:
        return 0.0
    w_gr = min(max(1.0 - n_noise / n_total, 0.0), 1.0)

    tf = np.array(tone_f)
    tl = _db(np.array(tone_p), a_ref**2)
    tz = bark(tf)
    tdz = np.array(tone_dz)

    # masking of each component by the others, the noise and the threshold
    ncsum = np.concatenate([[0.0], np.cumsum(np.where(usable, noise, 0.0))])
    lo = np.searchsorted(z, tz - 0.5, side="left")
    hi = np.searchsorted(z, tz + 0.5, side="right")
    mask = (ncsum[hi] - ncsum[lo]) / a_ref**2 + 10 ** (hearing_threshold(tf) / 10.0)
    upper = np.maximum(24.0 + 0.23 / (tf / 1000.0) - 0.2 * tl, 0.0)
    for start in range(0, len(tf), 512):
        sl = slice(start, start + 512)
        dz = tz[sl, None] - tz[None, :]  # target minus masker
        slope = np.where(dz < 0, 27.0, upper[None, :])
        spread = tl[None, :] - slope * np.abs(dz)
        contrib = 10 ** (spread / 10.0)
        idx = np.arange(len(tf))[sl]
        contrib[np.arange(len(idx)), idx] = 0.0
        mask[sl] += contrib.sum(axis=1)
    excess = tl - 10.0 * np.log10(mask)

    keep = excess > 0
    if not np.any(keep):
        return 0.0
    w = _w_bandwidth(tdz[keep]) * _w_level(excess[keep]) * _w_frequency(tf[keep])
    w_t = math.sqrt(float(np.sum(w**2)))
    return w_gr**0.79 * w_t**0.29


def sine(freq: float, level_db: float, duration: float, sample_rate: int = 48000,
         a_ref: float = DEFAULT_A_REF) -> Signal:
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return Signal(a_ref * 10 ** (level_db / 20.0) * math.sqrt(2.0) * np.sin(2 * np.pi * freq * t),
                  sample_rate)


@lru_cache(maxsize=None)
def _tonality_reference(neighbours: str) -> float:
    ref = magnitude_spectrum(sine(1000.0, 60.0, 1.0))
    return tonality_raw(ref, DEFAULT_A_REF, neighbours)


def tonality(spectrum: Spectrum, a_ref: float = DEFAULT_A_REF, neighbours: str = "printed") -> float:
    """Aures-style tonality in tu; a 1 kHz sine at 60 dB SPL reads 1.0.

    Spectral lines are local maxima exceeding the bins at the ``neighbours``
    offsets by at least 7 dB; narrow-band noise humps are added as further
    tonal components. Each component is weighted by bandwidth, level
    excess over its masked threshold and frequency, and the total is scaled
    by the tonal share of loudness.
    """
    return tonality_raw(spectrum, a_ref, neighbours) / _tonality_reference(neighbours)
