"""End-to-end analysis: IRs -> auralization -> features -> MDS -> correlation.

Every stage writes through the ``write_*`` helpers below so that running the
stages one at a time produces the same bytes as :func:`run_pipeline`.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .audio_io import ImpulseResponse, Signal, convolve, read_wav, write_wav
from .features import FeatureConfig, FeatureTable, compute_features
from .mds import Embedding, RatingSet, dimension_sweep, write_sweep
from .room_acoustics import edt, rt20, rt30, schroeder_decay
from .stats import correlation_matrix, write_correlation_csv

log = logging.getLogger(__name__)

STAGES = ("validate", "convolve", "analyze-ir", "features", "mds", "correlate")


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    irs: list[tuple[str, Path]]
    dry: Path
    ratings: Path
    output_dir: Path
    mds_dims: tuple[int, int] = (1, 6)
    restarts: int = 20
    seed: int = 0
    ties: str = "primary"
    jobs: int = 1
    features: FeatureConfig = field(default_factory=FeatureConfig)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.irs]

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> PipelineConfig:
        if "config" in d and "outputs" in d:  # a run manifest
            d = d["config"]
        for key in ("irs", "dry", "ratings"):
            if not d.get(key):
                raise ConfigError(f"missing required config entry {key!r}")
        mds = d.get("mds", {}) or {}
        dims = mds.get("dims", [1, 6])
        if isinstance(dims, int):
            dims = [dims, dims]
        return cls(
            irs=[(str(e["label"]), (base / e["path"]).resolve()) for e in d["irs"]],
            dry=(base / d["dry"]).resolve(),
            ratings=(base / d["ratings"]).resolve(),
            output_dir=(base / d.get("output_dir", "out")).resolve(),
            mds_dims=(int(dims[0]), int(dims[1])),
            restarts=int(mds.get("restarts", 20)),
            seed=int(mds.get("seed", 0)),
            ties=str(mds.get("ties", "primary")),
            jobs=int(d.get("jobs", 1)),
            features=FeatureConfig.from_dict(d.get("features")),
        )

    @classmethod
    def from_file(cls, path) -> PipelineConfig:
        path = Path(path)
        with open(path) as fh:
            d = json.load(fh) if path.suffix == ".json" else yaml.safe_load(fh)
        if not isinstance(d, dict):
            raise ConfigError(f"{path} does not hold a mapping")
        return cls.from_dict(d, path.parent)

    def to_dict(self) -> dict:
        return {
            "irs": [{"label": label, "path": str(p)} for label, p in self.irs],
            "dry": str(self.dry),
            "ratings": str(self.ratings),
            "output_dir": str(self.output_dir),
            "jobs": self.jobs,
            "mds": {"dims": list(self.mds_dims), "restarts": self.restarts,
                    "seed": self.seed, "ties": self.ties},
            "features": self.features.to_dict(),
        }

    def validate(self) -> None:
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise ConfigError("IR labels must be unique")
        for label, p in self.irs:
            if not p.is_file():
                raise ConfigError(f"IR file for {label!r} not found: {p}")
        for name, p in (("dry", self.dry), ("ratings", self.ratings)):
            if not p.is_file():
                raise ConfigError(f"{name} file not found: {p}")
        lo, hi = self.mds_dims
        n = len(labels)
        if not 1 <= lo <= hi <= n - 1:
            raise ConfigError(f"mds dims {lo}..{hi} outside 1..{n - 1}")
        if self.ties not in ("primary", "secondary"):
            raise ConfigError(f"unknown tie approach {self.ties!r}")


# -- stage helpers (shared with the CLI subcommands) -------------------------

def stimulus_path(out: Path, label: str) -> Path:
    return out / "stimuli" / f"{label}.wav"


def write_stimuli(dry: Signal, irs: list[ImpulseResponse], out: Path) -> list[Path]:
    (out / "stimuli").mkdir(parents=True, exist_ok=True)
    paths = []
    for ir in irs:
        p = stimulus_path(out, ir.label)
        write_wav(convolve(dry, ir), p)
        paths.append(p)
    return paths


def write_ir_analysis(irs: list[ImpulseResponse], out: Path) -> list[Path]:
    """Per-channel decay curves plus a channel-averaged RT30/RT20/EDT table."""
    (out / "decay").mkdir(parents=True, exist_ok=True)
    paths = []
    rows = []
    for ir in irs:
        vals = {"RT30": [], "RT20": [], "EDT": []}
        for c in range(ir.signal.channels):
            curve = schroeder_decay(ir.signal.channel(c))
            p = out / "decay" / f"{ir.label}_ch{c + 1}.csv"
            curve.to_csv(p)
            paths.append(p)
            vals["RT30"].append(rt30(curve))
            vals["RT20"].append(rt20(curve))
            vals["EDT"].append(edt(curve))
        rows.append([ir.label] + [repr(float(sum(v) / len(v))) for v in vals.values()])
    p = out / "room_parameters.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stimulus", "RT30", "RT20", "EDT"])
        w.writerows(rows)
    paths.append(p)
    return paths


def _features_job(args):
    label, stim_path, ir_path, cfg = args
    return compute_features(label, read_wav(stim_path), read_wav(ir_path), cfg)


def write_features(pairs: list[tuple[str, Path, Path]], out: Path, cfg: FeatureConfig,
                   jobs: int = 1) -> Path:
    """``pairs`` are ``(label, stimulus_wav, ir_wav)``; rows keep that order."""
    args = [(label, s, i, cfg) for label, s, i in pairs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_features_job, args))
    else:
        rows = [_features_job(a) for a in args]
    out.mkdir(parents=True, exist_ok=True)
    p = out / "features.csv"
    FeatureTable(rows).to_csv(p)
    return p


def embedding_paths(out: Path, dim: int) -> tuple[Path, Path]:
    return out / "mds" / f"embedding_d{dim}.csv", out / "mds" / f"embedding_d{dim}.json"


def write_mds(ratings: RatingSet, dims: tuple[int, int], out: Path, restarts: int,
              seed: int, ties: str, jobs: int = 1) -> list[Path]:
    (out / "mds").mkdir(parents=True, exist_ok=True)
    rows, fits = dimension_sweep(ratings, d_max=dims[1], d_min=dims[0], restarts=restarts,
                                 seed=seed, ties=ties, jobs=jobs)
    paths = []
    for dim, emb in fits.items():
        c, j = embedding_paths(out, dim)
        emb.write(c, j)
        paths += [c, j]
    p = out / "mds" / "sweep.csv"
    write_sweep(rows, p)
    paths.append(p)
    return paths


def write_correlations(features: FeatureTable, embeddings: list[tuple[Path, Path | None]],
                       out: Path) -> list[Path]:
    (out / "correlation").mkdir(parents=True, exist_ok=True)
    paths = []
    for coords_path, diag_path in embeddings:
        if diag_path is not None and not Path(diag_path).exists():
            diag_path = None
        emb = Embedding.read(coords_path, diag_path)
        matrix = correlation_matrix(emb, features)
        stress = emb.aggregate_stress1 if diag_path is not None else None
        fit = emb.fit_label if stress is not None else None
        p = out / "correlation" / f"correlation_d{emb.dimension}.csv"
        write_correlation_csv(matrix, p, stress, fit)
        paths.append(p)
    return paths


def load_irs(entries) -> list[ImpulseResponse]:
    return [ImpulseResponse(read_wav(p), label) for label, p in entries]


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage and write a manifest describing the run.

    Returns the manifest. On failure the manifest records the failing stage
    and the outputs of completed stages (flagged partial) before
    :class:`PipelineError` propagates.
    """
    out = config.output_dir
    status = {s: "pending" for s in STAGES}
    outputs: list[Path] = []
    manifest = {
        "roomdims_version": __version__,
        "config": config.to_dict(),
        "stages": status,
    }

    def finish(state: str, error: str | None = None) -> dict:
        manifest["status"] = state
        manifest["partial"] = state != "ok"
        if error:
            manifest["error"] = error
        manifest["outputs"] = {str(p.relative_to(out)): _sha256(p) for p in sorted(set(outputs))}
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest

    stage = "validate"
    try:
        config.validate()
        ratings = RatingSet.from_csv(config.ratings)
        if set(ratings.items) != set(config.labels):
            raise ConfigError(
                f"rating items {sorted(ratings.items)} do not match IR labels {sorted(config.labels)}"
            )
        ratings = reorder_ratings(ratings, config.labels)
        status[stage] = "ok"

        stage = "convolve"
        dry = read_wav(config.dry)
        irs = load_irs(config.irs)
        outputs += write_stimuli(dry, irs, out)
        status[stage] = "ok"

        stage = "analyze-ir"
        outputs += write_ir_analysis(irs, out)
        status[stage] = "ok"

        stage = "features"
        pairs = [(label, stimulus_path(out, label), p) for label, p in config.irs]
        outputs.append(write_features(pairs, out, config.features, config.jobs))
        status[stage] = "ok"

        stage = "mds"
        outputs += write_mds(ratings, config.mds_dims, out, config.restarts, config.seed,
                             config.ties, config.jobs)
        status[stage] = "ok"

        stage = "correlate"
        table = FeatureTable.from_csv(out / "features.csv")
        dims = range(config.mds_dims[0], config.mds_dims[1] + 1)
        outputs += write_correlations(table, [embedding_paths(out, d) for d in dims], out)
        status[stage] = "ok"
    except Exception as exc:
        status[stage] = "failed"
        log.error("stage %s failed: %s", stage, exc)
        if stage != "validate":
            finish("failed", f"[{stage}] {exc}")
        raise PipelineError(stage, exc) from exc
    return finish("ok")


def reorder_ratings(ratings: RatingSet, items: list[str]) -> RatingSet:
    """Re-express ``ratings`` with items in the given order."""
    if list(ratings.items) == list(items):
        return ratings
    pos = {lab: i for i, lab in enumerate(ratings.items)}
    n = len(items)
    old_index = {}
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            old_index[(i, j)] = k
            k += 1
    order = []
    for a in range(n):
        for b in range(a + 1, n):
            i, j = sorted((pos[items[a]], pos[items[b]]))
            order.append(old_index[(i, j)])
    return RatingSet(list(items), [s[order] for s in ratings.subjects], list(ratings.subject_ids))
