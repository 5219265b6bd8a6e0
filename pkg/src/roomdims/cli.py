"""Command-line entry point: ``roomdims <command> ...``.

Stage commands take explicit inputs, or fall back to the entries of a
pipeline ``--config`` file; outputs land in the same layout that ``run``
produces.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import corpus
from .audio_io import read_wav
from .features import FeatureConfig, FeatureTable
from .mds import RatingSet
from .pipeline import (
    ConfigError,
    PipelineConfig,
    PipelineError,
    embedding_paths,
    load_irs,
    reorder_ratings,
    run_pipeline,
    stimulus_path,
    write_correlations,
    write_features,
    write_ir_analysis,
    write_mds,
    write_stimuli,
)

def _labeled(values: list[str] | None, what: str) -> list[tuple[str, Path]]:
    out = []
    for v in values or []:
        label, sep, path = v.partition("=")
        if not sep or not label:
            raise ConfigError(f"{what} must be given as LABEL=PATH, got {v!r}")
        out.append((label, Path(path)))
    return out


def _dims(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    return int(lo), int(hi or lo)


def _load_config(args) -> PipelineConfig | None:
    if not args.config:
        return None
    cfg = PipelineConfig.from_file(args.config)
    if args.output_dir:
        cfg.output_dir = Path(args.output_dir).resolve()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return cfg


def _out(args, cfg) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    if cfg is not None:
        return cfg.output_dir
    raise ConfigError("--output-dir is required without --config")


def cmd_run(args, cfg):
    if cfg is None:
        raise ConfigError("run needs --config (a config file or a run manifest)")
    manifest = run_pipeline(cfg)
    print(f"pipeline finished: {len(manifest['outputs'])} outputs in {cfg.output_dir}")


def cmd_make_corpus(args, cfg):
    path = corpus.write_corpus(args.directory, args.subjects)
    print(path)


def cmd_convolve(args, cfg):
    irs = _labeled(args.ir, "--ir") or (cfg.irs if cfg else [])
    dry = args.dry or (cfg.dry if cfg else None)
    if not irs or dry is None:
        raise ConfigError("convolve needs --dry and at least one --ir")
    for p in write_stimuli(read_wav(dry), load_irs(irs), _out(args, cfg)):
        print(p)


def cmd_analyze_ir(args, cfg):
    irs = _labeled(args.ir, "--ir") or (cfg.irs if cfg else [])
    if not irs:
        raise ConfigError("analyze-ir needs at least one --ir")
    paths = write_ir_analysis(load_irs(irs), _out(args, cfg))
    print(paths[-1].read_text(), end="")


def cmd_features(args, cfg):
    out = _out(args, cfg)
    irs = _labeled(args.ir, "--ir") or (cfg.irs if cfg else [])
    stimuli = dict(_labeled(args.stimulus, "--stimulus"))
    if not stimuli and cfg is not None:
        stimuli = {label: stimulus_path(out, label) for label, _ in irs}
    missing = [label for label, _ in irs if label not in stimuli]
    if not irs or missing:
        raise ConfigError(f"features needs a --stimulus and --ir per label (missing {missing})")
    fcfg = cfg.features if cfg else FeatureConfig()
    jobs = args.jobs or (cfg.jobs if cfg else 1)
    print(write_features([(label, stimuli[label], p) for label, p in irs], out, fcfg, jobs))


def cmd_mds(args, cfg):
    out = _out(args, cfg)
    ratings_path = args.ratings or (cfg.ratings if cfg else None)
    if ratings_path is None:
        raise ConfigError("mds needs --ratings")
    ratings = RatingSet.from_csv(ratings_path)
    items = args.items.split(",") if args.items else (cfg.labels if cfg else None)
    if items:
        ratings = reorder_ratings(ratings, items)
    dims = _dims(args.dims) if args.dims else (cfg.mds_dims if cfg else (1, 6))
    restarts = args.restarts if args.restarts is not None else (cfg.restarts if cfg else 20)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    ties = args.ties or (cfg.ties if cfg else "primary")
    jobs = args.jobs or (cfg.jobs if cfg else 1)
    for p in write_mds(ratings, dims, out, restarts, seed, ties, jobs):
        print(p)


def cmd_correlate(args, cfg):
    out = _out(args, cfg)
    features = args.features or (out / "features.csv" if cfg else None)
    if features is None:
        raise ConfigError("correlate needs --features")
    if args.embedding:
        embs = [(Path(p), Path(p).with_suffix(".json")) for p in args.embedding]
    elif cfg is not None:
        embs = [embedding_paths(out, d) for d in range(cfg.mds_dims[0], cfg.mds_dims[1] + 1)]
    else:
        raise ConfigError("correlate needs at least one --embedding")
    for p in write_correlations(FeatureTable.from_csv(features), embs, out):
        print(p)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config (YAML) or run manifest (JSON)")
    common.add_argument("--output-dir", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="MDS random seed")
    common.add_argument("--jobs", type=int, default=None, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="roomdims", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run the whole pipeline")
    s.set_defaults(func=cmd_run, stage="run")

    s = sub.add_parser("make-corpus", parents=[common], help="write the synthetic demo corpus")
    s.add_argument("directory")
    s.add_argument("--subjects", type=int, default=11)
    s.set_defaults(func=cmd_make_corpus, stage="make-corpus")

    s = sub.add_parser("convolve", parents=[common], help="auralize the dry signal with each IR")
    s.add_argument("--dry")
    s.add_argument("--ir", action="append", metavar="LABEL=PATH")
    s.set_defaults(func=cmd_convolve, stage="convolve")

    s = sub.add_parser("analyze-ir", parents=[common], help="decay curves, RT30, RT20, EDT")
    s.add_argument("--ir", action="append", metavar="LABEL=PATH")
    s.set_defaults(func=cmd_analyze_ir, stage="analyze-ir")

    s = sub.add_parser("features", parents=[common], help="twelve-column feature table")
    s.add_argument("--stimulus", action="append", metavar="LABEL=PATH")
    s.add_argument("--ir", action="append", metavar="LABEL=PATH")
    s.set_defaults(func=cmd_features, stage="features")

    s = sub.add_parser("mds", parents=[common], help="nonmetric MDS of ratings")
    s.add_argument("--ratings")
    s.add_argument("--dims", help="a dimension or range, e.g. 2 or 1-6")
    s.add_argument("--restarts", type=int, default=None)
    s.add_argument("--ties", choices=["primary", "secondary"])
    s.add_argument("--items", help="comma-separated item order")
    s.set_defaults(func=cmd_mds, stage="mds")

    s = sub.add_parser("correlate", parents=[common], help="Kendall tau-b of dimensions vs features")
    s.add_argument("--features")
    s.add_argument("--embedding", action="append", help="embedding coordinates CSV")
    s.set_defaults(func=cmd_correlate, stage="correlate")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        args.func(args, cfg)
    except PipelineError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error [{args.stage}]: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
