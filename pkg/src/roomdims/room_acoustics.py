"""Schroeder decay curves and decay-time parameters (RT20, RT30, EDT)."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .audio_io import Signal
from .spectral import SilentInputError

DECAY_FLOOR_DB = -300.0


class DecayRangeError(ValueError):
    """The decay curve does not span the requested evaluation range."""


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    level_db: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "level_db"])
            for t, level in zip(self.times, self.level_db):
                w.writerow([repr(float(t)), repr(float(level))])


def truncation_index(x: np.ndarray, sample_rate: int, window: float = 0.05,
                     margin_db: float = 3.0, tail_fraction: float = 0.1) -> int:
    """End index (exclusive) of the usable part of a noisy impulse response.

    The noise floor is the mean power of the final ``tail_fraction`` of the
    response (at least one window long). The response is cut where a
    ``window``-second moving RMS, searched from the peak onwards, first comes
    within ``margin_db`` of that floor.
    """
    n = len(x)
    win = max(1, int(round(window * sample_rate)))
    if n < 2 * win:
        return n
    p = x * x
    tail = max(win, int(tail_fraction * n))
    floor = p[-tail:].mean()
    csum = np.concatenate([[0.0], np.cumsum(p)])
    ms = (csum[win:] - csum[:-win]) / win  # window starting at each index
    start = int(np.argmax(np.abs(x)))
    hits = np.nonzero(ms[start:] <= floor * 10 ** (margin_db / 10.0))[0]
    if len(hits) == 0:
        return n
    # the window that first reaches the floor is centred half a window later
    return int(min(n, start + hits[0] + win // 2))


def schroeder_decay(ir: Signal, truncate: bool = True) -> DecayCurve:
    """Backward-integrated energy decay of a mono impulse response in dB.

    With ``truncate`` the response is first cut at the noise floor (see
    :func:`truncation_index`). Zero remaining energy maps to
    ``DECAY_FLOOR_DB``.
    """
    x = ir.mono()
    if not np.any(x):
        raise SilentInputError("silent impulse response")
    if truncate:
        x = x[: truncation_index(x, ir.sample_rate)]
    energy = np.cumsum((x * x)[::-1])[::-1]
    with np.errstate(divide="ignore"):
        level = 10.0 * np.log10(energy / energy[0])
    level = np.maximum(level, DECAY_FLOOR_DB)
    level = np.minimum.accumulate(level)  # guard against rounding upticks
    times = np.arange(len(x)) / ir.sample_rate
    return DecayCurve(times, level)


def decay_time(curve: DecayCurve, start_db: float, end_db: float,
               extrapolate_to: float = -60.0) -> float:
    """Least-squares decay time between two levels, extrapolated to ``extrapolate_to``."""
    if not start_db > end_db:
        raise ValueError("start_db must be above end_db")
    L = curve.level_db
    below_end = np.nonzero(L <= end_db)[0]
    if len(below_end) == 0:
        raise DecayRangeError(
            f"insufficient decay range: curve never reaches {end_db} dB"
        )
    i0 = int(np.nonzero(L <= start_db)[0][0])
    i1 = int(below_end[0])
    if i1 - i0 < 2:
        i1 = i0 + 2
    slope, _ = np.polyfit(curve.times[i0:i1 + 1], L[i0:i1 + 1], 1)
    if not slope < 0:
        raise DecayRangeError("non-decaying curve")
    return abs(extrapolate_to) / abs(slope)


def rt20(curve: DecayCurve) -> float:
    return decay_time(curve, -5.0, -25.0)


def rt30(curve: DecayCurve) -> float:
    return decay_time(curve, -5.0, -35.0)


def edt(curve: DecayCurve) -> float:
    return decay_time(curve, -0.1, -10.1)


def room_parameters(ir: Signal) -> dict:
    """RT30, RT20 and EDT averaged over the channels of ``ir``."""
    values = {"RT30": [], "RT20": [], "EDT": []}
    for c in range(ir.channels):
        curve = schroeder_decay(ir.channel(c))
        values["RT30"].append(rt30(curve))
        values["RT20"].append(rt20(curve))
        values["EDT"].append(edt(curve))
    return {k: float(np.mean(v)) for k, v in values.items()}
