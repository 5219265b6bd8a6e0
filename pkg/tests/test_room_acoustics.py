import numpy as np
import pytest

from roomdims.audio_io import Signal, exponential_envelope, synth_exponential_ir
from roomdims.room_acoustics import (
    DecayCurve,
    DecayRangeError,
    decay_time,
    edt,
    room_parameters,
    rt20,
    rt30,
    schroeder_decay,
    truncation_index,
)
from roomdims.spectral import SilentInputError

from helpers import two_slope_ir

SR = 48000


def test_ideal_exponential_decay():
    # the energy decay of a pure exponential is itself exponential
    t60 = 1.0
    x = exponential_envelope(np.arange(3 * SR) / SR, t60)
    curve = schroeder_decay(Signal(x, SR), truncate=False)
    assert rt30(curve) == pytest.approx(t60, rel=1e-3)
    assert edt(curve) == pytest.approx(t60, rel=1e-3)


def test_curve_is_monotone_and_starts_at_zero():
    curve = schroeder_decay(synth_exponential_ir(1.0, 1.5).signal)
    assert curve.level_db[0] == 0.0
    assert np.all(np.diff(curve.level_db) <= 0)


@pytest.mark.parametrize("t60", [0.5, 1.0, 1.5, 2.0])
def test_synthetic_ir_recovery(t60):
    ir = synth_exponential_ir(t60, 1.5 * t60, seed=int(t60 * 10))
    params = room_parameters(ir.signal)
    for key in ("RT30", "RT20", "EDT"):
        assert params[key] == pytest.approx(t60, rel=0.02), key


def test_two_slope_edt_below_rt30():
    curve = schroeder_decay(two_slope_ir())
    assert edt(curve) < rt30(curve)
    assert edt(curve) == pytest.approx(0.8, rel=0.1)


def test_noise_floor_truncation():
    t60 = 1.0
    clean = synth_exponential_ir(t60, 3.0, seed=2).signal.mono()
    noisy = clean + 1e-4 * np.random.default_rng(9).standard_normal(len(clean))
    cut = truncation_index(noisy, SR)
    # envelope reaches the -80 dB noise floor around 80/60 * t60 seconds
    assert 1.0 * SR < cut < 1.7 * SR
    assert rt30(schroeder_decay(Signal(noisy, SR))) == pytest.approx(t60, rel=0.05)


def test_insufficient_range():
    curve = DecayCurve(np.linspace(0, 1, 100), np.linspace(0, -20, 100))
    with pytest.raises(DecayRangeError, match="insufficient decay range"):
        rt30(curve)
    assert rt20(DecayCurve(np.linspace(0, 1, 100), np.linspace(0, -30, 100))) == pytest.approx(2.0)


def test_linear_curve_extrapolation():
    curve = DecayCurve(np.linspace(0, 2, 2001), np.linspace(0, -80, 2001))
    assert decay_time(curve, -5, -35) == pytest.approx(1.5)


def test_silent_ir():
    with pytest.raises(SilentInputError):
        schroeder_decay(Signal(np.zeros(1000), SR))


def test_csv_columns(tmp_path):
    curve = schroeder_decay(synth_exponential_ir(0.5, 0.5).signal)
    curve.to_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "time,level_db"
    assert len(lines) == len(curve.times) + 1
