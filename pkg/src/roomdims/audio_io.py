"""Audio containers, WAV I/O, synthetic impulse responses and auralization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile


class AudioError(ValueError):
    """Raised for malformed audio input or incompatible signals."""


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled audio with one or two channels.

    ``samples`` is stored as a read-only float64 array of shape
    ``(channels, n_samples)``. A 1-D array is accepted and treated as mono.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if x.ndim != 2:
            raise AudioError("samples must be 1-D or (channels, n)")
        if x.shape[0] not in (1, 2):
            raise AudioError(f"unsupported channel count: {x.shape[0]}")
        if x.shape[1] == 0:
            raise AudioError("zero-length audio")
        if not np.all(np.isfinite(x)):
            raise AudioError("samples contain NaN or infinite values")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise AudioError("sample_rate must be a positive integer")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, index: int) -> Signal:
        return Signal(self.samples[index], self.sample_rate)

    def mono(self) -> np.ndarray:
        """Return the samples of a mono signal as a 1-D array."""
        if self.channels != 1:
            raise AudioError("expected a mono signal")
        return self.samples[0]

    def scaled(self, factor: float) -> Signal:
        return Signal(self.samples * factor, self.sample_rate)


@dataclass(frozen=True)
class ImpulseResponse:
    signal: Signal
    label: str

    def __post_init__(self):
        if not np.max(np.abs(self.signal.samples)) > 0:
            raise AudioError(f"impulse response {self.label!r} is silent")


def read_wav(path) -> Signal:
    """Read a PCM (8/16/24/32-bit) or float WAV file.

    Integer formats are scaled so that full scale maps to [-1, 1), i.e. a
    16-bit sample of 32767 becomes 32767/32768.
    """
    try:
        rate, data = wavfile.read(str(path))
    except (OSError, ValueError) as exc:
        raise AudioError(f"cannot read {path}: {exc}") from exc
    if data.ndim == 2 and data.shape[1] > 2:
        raise AudioError(f"unsupported channel count: {data.shape[1]}")
    if data.shape[0] == 0:
        raise AudioError(f"zero-length audio in {path}")
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit samples into int32
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype.kind == "f":
        x = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported sample format {data.dtype}")
    return Signal(x.T if x.ndim == 2 else x, rate)


def write_wav(signal: Signal, path, dtype: str = "float32") -> None:
    """Write ``signal`` as an IEEE float WAV (32-bit by default).

    Samples that are exactly representable in ``dtype`` survive a
    ``read_wav`` round-trip bit-exactly; use ``dtype="float64"`` to keep
    full internal precision.
    """
    if dtype not in ("float32", "float64"):
        raise AudioError("dtype must be float32 or float64")
    data = signal.samples.astype(dtype)
    data = data[0] if signal.channels == 1 else data.T
    try:
        wavfile.write(str(path), signal.sample_rate, np.ascontiguousarray(data))
    except OSError as exc:
        raise AudioError(f"cannot write {path}: {exc}") from exc


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fft_convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full linear convolution via a zero-padded power-of-two real FFT."""
    n_out = len(x) + len(h) - 1
    n_fft = _next_pow2(n_out)
    y = np.fft.irfft(np.fft.rfft(x, n_fft) * np.fft.rfft(h, n_fft), n_fft)
    return y[:n_out]


def convolve(dry: Signal, ir: ImpulseResponse) -> Signal:
    """Auralize a mono ``dry`` signal with a (binaural) impulse response.

    The output has one channel per IR channel and length
    ``len(dry) + len(ir) - 1``.
    """
    if dry.channels != 1:
        raise AudioError("dry signal must be mono")
    if dry.sample_rate != ir.signal.sample_rate:
        raise AudioError(
            f"sample-rate mismatch: dry {dry.sample_rate} Hz, "
            f"IR {ir.signal.sample_rate} Hz"
        )
    x = dry.mono()
    out = np.stack([fft_convolve(x, h) for h in ir.signal.samples])
    return Signal(out, dry.sample_rate)


def exponential_envelope(t: np.ndarray, t60: float) -> np.ndarray:
    """Amplitude envelope whose energy falls by 60 dB every ``t60`` seconds."""
    return np.exp(-3.0 * np.log(10.0) * t / t60)


def synth_exponential_ir(
    t60: float,
    duration: float,
    sample_rate: int = 48000,
    seed: int = 0,
    channels: int = 1,
    label: str | None = None,
) -> ImpulseResponse:
    """Gaussian noise under an exponential decay envelope.

    The squared envelope drops by exactly 60 dB per ``t60``, so the
    Schroeder decay of the result has slope ``-60 / t60`` dB/s.
    """
    if t60 <= 0 or duration <= 0:
        raise AudioError("t60 and duration must be positive")
    n = int(round(duration * sample_rate))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate
    noise = rng.standard_normal((channels, n))
    x = noise * exponential_envelope(t, t60)
    x /= np.max(np.abs(x))
    return ImpulseResponse(Signal(x, sample_rate), label or f"exp_t60_{t60:g}")
