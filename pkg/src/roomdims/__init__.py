"""Room-acoustic perception analysis: auralization, (psycho)acoustic features,
nonmetric MDS of dissimilarity ratings and rank correlation between them."""

__version__ = "0.1.0"

from .audio_io import ImpulseResponse, Signal, convolve, read_wav, synth_exponential_ir, write_wav
from .complexity import EmbeddingConfig, correlation_dimension, echo_density
from .features import FEATURE_COLUMNS, FeatureConfig, FeatureTable, FeatureVector, compute_features
from .mds import Embedding, RatingSet, classify_stress, dimension_sweep, fit_mds, monotone_regression
from .psychoacoustics import (
    fluctuation_strength,
    loudness,
    roughness_hb,
    roughness_sottek,
    sharpness,
    spectral_centroid,
    tonality,
)
from .room_acoustics import DecayCurve, decay_time, schroeder_decay
from .spectral import Spectrum, bark_band_levels, extract_partials, magnitude_spectrum, stft
from .stats import CorrelationCell, correlation_matrix, kendall_tau_b

__all__ = [
    "CorrelationCell", "DecayCurve", "Embedding", "EmbeddingConfig", "FEATURE_COLUMNS",
    "FeatureConfig", "FeatureTable", "FeatureVector", "ImpulseResponse", "RatingSet", "Signal",
    "Spectrum", "bark_band_levels", "classify_stress", "compute_features", "convolve",
    "correlation_dimension", "correlation_matrix", "decay_time", "dimension_sweep", "echo_density",
    "extract_partials", "fit_mds", "fluctuation_strength", "kendall_tau_b", "loudness",
    "magnitude_spectrum", "monotone_regression", "read_wav", "roughness_hb", "roughness_sottek",
    "schroeder_decay", "sharpness", "spectral_centroid", "stft", "synth_exponential_ir", "tonality",
    "write_wav",
]
