"""Deterministic synthetic corpus standing in for measured venues and listeners.

Nine binaural impulse responses (three "venues" with three positions each),
a dry plucked-string phrase and ratings from eleven simulated subjects.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .audio_io import ImpulseResponse, Signal, exponential_envelope, write_wav
from .mds import RatingSet, pair_distances

SAMPLE_RATE = 48000

# label, t60 (s), early reflection count, early-decay t60 (s), direct-path level
ROOMS = [
    ("A1", 1.2, 6, 1.0, 1.0),
    ("A2", 1.3, 10, 1.2, 0.8),
    ("A3", 1.1, 4, 0.9, 0.9),
    ("B1", 1.5, 14, 1.4, 0.7),
    ("B2", 1.6, 8, 1.5, 1.0),
    ("B3", 1.4, 18, 1.3, 0.6),
    ("C1", 2.0, 12, 1.8, 0.8),
    ("C2", 1.9, 20, 2.0, 0.5),
    ("C3", 2.1, 5, 1.7, 0.9),
]


def room_ir(label, t60, n_refl, early_t60, direct, seed, sample_rate=SAMPLE_RATE) -> ImpulseResponse:
    """Binaural IR: direct sound, discrete early reflections, exponential noise tail."""
    rng = np.random.default_rng(seed)
    n = int(round(min(1.2 * t60, 2.5) * sample_rate))
    t = np.arange(n) / sample_rate
    onset = int(0.005 * sample_rate)
    chans = []
    for ear in range(2):
        h = np.zeros(n)
        h[onset + ear * 12] = direct
        delays = rng.integers(int(0.004 * sample_rate), int(0.08 * sample_rate), n_refl) + onset
        h[delays] += rng.uniform(0.2, 0.6, n_refl) * rng.choice([-1.0, 1.0], n_refl)
        env = np.where(t < 0.08, exponential_envelope(t, early_t60), 1.0)
        env = env * exponential_envelope(t, t60)
        tail = rng.standard_normal(n) * env * 0.08
        tail[: onset + int(0.002 * sample_rate)] = 0.0
        chans.append(h + tail)
    x = np.array(chans)
    return ImpulseResponse(Signal(x / np.abs(x).max(), sample_rate), label)


def dry_phrase(duration=2.5, sample_rate=SAMPLE_RATE, seed=7) -> Signal:
    """Plucked harmonic notes with fast decays, roughly banjo-like."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    x = np.zeros(n)
    notes = [293.66, 392.0, 493.88, 587.33, 392.0, 440.0, 369.99, 293.66, 493.88, 440.0]
    step = duration / len(notes)
    for k, f0 in enumerate(notes):
        start = int(k * step * sample_rate)
        tt = t[start:] - t[start]
        note = np.zeros(len(tt))
        for h in range(1, 9):
            if h * f0 > 12000:
                break
            amp = 1.0 / h * rng.uniform(0.7, 1.0)
            note += amp * np.exp(-tt * (3.0 + 1.5 * h)) * np.sin(2 * np.pi * h * f0 * tt + rng.uniform(0, 2 * np.pi))
        x[start:] += note
    x += 0.002 * rng.standard_normal(n)
    return Signal(0.25 * x / np.abs(x).max(), sample_rate)


def simulated_ratings(n_subjects=11, seed=11) -> RatingSet:
    """Likert ratings from a latent space spanned by the room parameters."""
    rng = np.random.default_rng(seed)
    latent = np.array([[r[1], r[2] / 10.0, r[3], r[4]] for r in ROOMS])
    latent = (latent - latent.mean(axis=0)) / latent.std(axis=0)
    true = pair_distances(latent)
    subjects = []
    for _ in range(n_subjects):
        noisy = true * np.exp(rng.normal(0.0, 0.2, len(true)))
        cuts = np.quantile(noisy, np.linspace(0, 1, 8)[1:-1])
        subjects.append(1.0 + np.searchsorted(cuts, noisy))
    return RatingSet([r[0] for r in ROOMS], subjects, [f"S{k + 1:02d}" for k in range(n_subjects)])


def write_corpus(directory, n_subjects=11) -> Path:
    """Write IRs, dry phrase, ratings and a pipeline config; return the config path."""
    root = Path(directory)
    (root / "irs").mkdir(parents=True, exist_ok=True)
    irs = []
    for k, (label, t60, n_refl, early, direct) in enumerate(ROOMS):
        ir = room_ir(label, t60, n_refl, early, direct, seed=100 + k)
        write_wav(ir.signal, root / "irs" / f"{label}.wav")
        irs.append({"label": label, "path": f"irs/{label}.wav"})
    write_wav(dry_phrase(), root / "dry.wav")
    simulated_ratings(n_subjects).to_csv(root / "ratings.csv")
    config = {
        "irs": irs,
        "dry": "dry.wav",
        "ratings": "ratings.csv",
        "output_dir": "out",
        "mds": {"dims": [1, 6], "restarts": 20, "seed": 1, "ties": "primary"},
    }
    path = root / "config.yaml"
    with open(path, "w") as fh:
        yaml.safe_dump(config, fh, sort_keys=False)
    return path
