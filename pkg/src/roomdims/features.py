"""The twelve-column feature table: one row per stimulus."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import complexity, psychoacoustics as pa, room_acoustics, spectral
from .audio_io import Signal

FEATURE_COLUMNS = ("N", "S", "R_S", "R_B", "F", "K", "C", "RT30", "RT20", "EDT", "E", "D")


@dataclass(frozen=True)
class FeatureConfig:
    a_ref: float = spectral.DEFAULT_A_REF
    loudness_mode: str = "rms"
    sharpness_weighting: str = "level"
    tonality_neighbours: str = "printed"
    partial_threshold: float = 1e-4
    max_partials: int = 256
    stft_window: int = 1024
    stft_hop: int = 512
    embedding: complexity.EmbeddingConfig = field(default_factory=complexity.EmbeddingConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["embedding"]["radius_quantiles"] = list(self.embedding.radius_quantiles)
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> FeatureConfig:
        d = dict(d or {})
        emb = dict(d.pop("embedding", {}) or {})
        if "radius_quantiles" in emb:
            emb["radius_quantiles"] = tuple(emb["radius_quantiles"])
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown feature options: {sorted(unknown)}")
        # YAML reads exponent-only numbers such as 2e-5 as strings
        for name, value in d.items():
            default = getattr(cls, name)
            if isinstance(default, (int, float)) and not isinstance(default, bool):
                d[name] = type(default)(value)
        return cls(embedding=complexity.EmbeddingConfig(**emb), **d)


@dataclass(frozen=True)
class FeatureVector:
    label: str
    N: float
    S: float
    R_S: float
    R_B: float
    F: float
    K: float
    C: float
    RT30: float
    RT20: float
    EDT: float
    E: float
    D: float

    def __post_init__(self):
        for name in FEATURE_COLUMNS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"feature {name} of {self.label!r} is not finite")

    def values(self) -> list[float]:
        return [getattr(self, name) for name in FEATURE_COLUMNS]


@dataclass
class FeatureTable:
    rows: list[FeatureVector]

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        if name not in FEATURE_COLUMNS:
            raise KeyError(name)
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stimulus", *FEATURE_COLUMNS])
            for r in self.rows:
                w.writerow([r.label, *(repr(float(v)) for v in r.values())])

    @classmethod
    def from_csv(cls, path) -> FeatureTable:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(FEATURE_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise ValueError(f"feature CSV lacks columns {sorted(missing)}")
            rows = [
                FeatureVector(row["stimulus"], *(float(row[c]) for c in FEATURE_COLUMNS))
                for row in reader
            ]
        return cls(rows)


def stimulus_features(stimulus: Signal, cfg: FeatureConfig = FeatureConfig()) -> dict:
    """Features of an auralized stimulus, averaged over its channels."""
    per_channel = []
    for c in range(stimulus.channels):
        x = stimulus.channel(c)
        spec = spectral.magnitude_spectrum(x)
        partials = spectral.extract_partials(spec, cfg.partial_threshold, cfg.max_partials)
        rough, fluct = pa.modulation_features(x)
        per_channel.append({
            "S": pa.sharpness(spectral.bark_band_levels(spec, cfg.a_ref), cfg.sharpness_weighting),
            "R_S": rough,
            "R_B": pa.roughness_hb(partials),
            "F": fluct,
            "K": pa.tonality(spec, cfg.a_ref, cfg.tonality_neighbours),
            "C": pa.spectral_centroid(spec),
            "E": complexity.echo_density(x, cfg.stft_window, cfg.stft_hop),
            "D": complexity.correlation_dimension(x, cfg.embedding),
        })
    out = {k: float(np.mean([p[k] for p in per_channel])) for k in per_channel[0]}
    out["N"] = pa.loudness(stimulus, cfg.a_ref, cfg.loudness_mode)
    return out


def compute_features(label: str, stimulus: Signal, ir: Signal,
                     cfg: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """Full feature row: room parameters from ``ir``, the rest from ``stimulus``."""
    values = stimulus_features(stimulus, cfg)
    values.update(room_acoustics.room_parameters(ir))
    return FeatureVector(label, **{k: values[k] for k in FEATURE_COLUMNS})
