import json
import shutil

import numpy as np
import pytest
import yaml

from roomdims import corpus
from roomdims.audio_io import write_wav
from roomdims.cli import main
from roomdims.features import FEATURE_COLUMNS, FeatureConfig, FeatureTable, compute_features
from roomdims.mds import RatingSet, pair_distances
from roomdims.pipeline import ConfigError, PipelineConfig, PipelineError, run_pipeline

MINI_ROOMS = [("R1", 0.4, 3, 0.3, 1.0), ("R2", 0.6, 8, 0.5, 0.7),
              ("R3", 0.5, 5, 0.5, 0.9), ("R4", 0.8, 12, 0.6, 0.6)]


@pytest.fixture(scope="module")
def mini_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("mini")
    (root / "irs").mkdir()
    for k, room in enumerate(MINI_ROOMS):
        ir = corpus.room_ir(*room, seed=k)
        write_wav(ir.signal, root / "irs" / f"{room[0]}.wav")
    write_wav(corpus.dry_phrase(duration=2.0), root / "dry.wav")
    latent = np.array([[r[1], r[2] / 10, r[4]] for r in MINI_ROOMS])
    d = pair_distances(latent)
    rng = np.random.default_rng(0)
    subjects = [np.clip(np.round(1 + 6 * (d * np.exp(0.1 * rng.standard_normal(6))) / d.max()), 1, 7)
                for _ in range(3)]
    RatingSet([r[0] for r in MINI_ROOMS], subjects, ["s1", "s2", "s3"]).to_csv(root / "ratings.csv")
    config = {
        "irs": [{"label": r[0], "path": f"irs/{r[0]}.wav"} for r in MINI_ROOMS],
        "dry": "dry.wav",
        "ratings": "ratings.csv",
        "output_dir": "out",
        "mds": {"dims": [1, 2], "restarts": 4, "seed": 3},
    }
    (root / "config.yaml").write_text(yaml.safe_dump(config))
    return root


@pytest.fixture(scope="module")
def one_shot(mini_corpus):
    assert main(["run", "--config", str(mini_corpus / "config.yaml")]) == 0
    return mini_corpus / "out"


def _outputs(out):
    return json.loads((out / "manifest.json").read_text())["outputs"]


def test_run_layout(one_shot):
    outputs = _outputs(one_shot)
    for name in ("features.csv", "room_parameters.csv", "mds/sweep.csv", "mds/embedding_d2.csv",
                 "mds/embedding_d2.json", "correlation/correlation_d1.csv",
                 "correlation/correlation_d2.csv", "stimuli/R3.wav", "decay/R4_ch2.csv"):
        assert name in outputs, name
    manifest = json.loads((one_shot / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["partial"] is False
    assert all(v == "ok" for v in manifest["stages"].values())
    table = FeatureTable.from_csv(one_shot / "features.csv")
    assert table.labels == ["R1", "R2", "R3", "R4"]
    for name in FEATURE_COLUMNS:
        assert np.all(np.isfinite(table.column(name)))


def test_sweep_rows(one_shot):
    lines = (one_shot / "mds" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "dimension,aggregate_stress1,mean_rsq,fit"
    assert [line.split(",")[0] for line in lines[1:]] == ["1", "2"]


def test_staged_equals_one_shot(mini_corpus, one_shot, tmp_path):
    cfg = str(mini_corpus / "config.yaml")
    out = tmp_path / "staged"
    common = ["--config", cfg, "--output-dir", str(out)]
    for command in ("convolve", "analyze-ir", "features", "mds", "correlate"):
        assert main([command, *common]) == 0, command
    for name, digest in _outputs(one_shot).items():
        staged = out / name
        assert staged.read_bytes() == (one_shot / name).read_bytes(), name


def test_explicit_stage_arguments(mini_corpus, one_shot, tmp_path):
    irs = [f"--ir={r[0]}={mini_corpus / 'irs' / (r[0] + '.wav')}" for r in MINI_ROOMS]
    assert main(["analyze-ir", *irs, "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "room_parameters.csv").read_bytes() == (one_shot / "room_parameters.csv").read_bytes()
    assert main(["mds", "--ratings", str(mini_corpus / "ratings.csv"), "--dims", "2",
                 "--restarts", "4", "--seed", "3", "--output-dir", str(tmp_path)]) == 0
    assert main(["correlate", "--features", str(one_shot / "features.csv"),
                 "--embedding", str(tmp_path / "mds" / "embedding_d2.csv"),
                 "--output-dir", str(tmp_path)]) == 0
    assert ((tmp_path / "correlation" / "correlation_d2.csv").read_bytes()
            == (one_shot / "correlation" / "correlation_d2.csv").read_bytes())


def test_manifest_rerun_is_bit_identical(one_shot, tmp_path):
    copy = tmp_path / "manifest.json"
    shutil.copy(one_shot / "manifest.json", copy)
    rerun = tmp_path / "rerun"
    assert main(["run", "--config", str(copy), "--output-dir", str(rerun)]) == 0
    assert _outputs(rerun) == _outputs(one_shot)


def test_features_match_direct_computation(mini_corpus, one_shot):
    from roomdims.audio_io import read_wav

    row = compute_features("R2", read_wav(one_shot / "stimuli" / "R2.wav"),
                           read_wav(mini_corpus / "irs" / "R2.wav"), FeatureConfig())
    table = FeatureTable.from_csv(one_shot / "features.csv")
    assert table.rows[1] == row


def test_missing_ratings_file(mini_corpus, tmp_path, capsys):
    config = yaml.safe_load((mini_corpus / "config.yaml").read_text())
    config["ratings"] = "nope.csv"
    p = mini_corpus / "broken.yaml"
    p.write_text(yaml.safe_dump(config))
    assert main(["run", "--config", str(p), "--output-dir", str(tmp_path / "o")]) != 0
    err = capsys.readouterr().err
    assert "[validate]" in err and "ratings" in err
    assert not (tmp_path / "o" / "manifest.json").exists()


def test_label_mismatch(mini_corpus, tmp_path):
    ratings = RatingSet.from_csv(mini_corpus / "ratings.csv")
    RatingSet(["R1", "R2", "R3", "X9"], ratings.subjects).to_csv(tmp_path / "r.csv")
    cfg = PipelineConfig.from_file(mini_corpus / "config.yaml")
    cfg.ratings = tmp_path / "r.csv"
    cfg.output_dir = tmp_path / "o"
    with pytest.raises(PipelineError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "validate"
    assert "X9" in str(info.value)


def test_failure_records_partial_manifest(mini_corpus, tmp_path):
    cfg = PipelineConfig.from_file(mini_corpus / "config.yaml")
    cfg.output_dir = tmp_path / "o"
    cfg.ties = "primary"
    cfg.features = FeatureConfig(loudness_mode="bogus")
    with pytest.raises(PipelineError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "features"
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["partial"] is True
    assert manifest["stages"]["analyze-ir"] == "ok"
    assert manifest["stages"]["features"] == "failed"
    assert "stimuli/R1.wav" in manifest["outputs"]


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="irs"):
        PipelineConfig.from_dict({"dry": "d.wav", "ratings": "r.csv"})
    with pytest.raises(ValueError, match="unknown feature options"):
        PipelineConfig.from_dict({"irs": [{"label": "a", "path": "a.wav"}], "dry": "d", "ratings": "r",
                                  "features": {"colour": 1}})


def test_cli_usage_errors(capsys):
    assert main(["mds", "--output-dir", "x"]) == 2
    assert "[mds]" in capsys.readouterr().err
    assert main(["convolve", "--ir", "noequals", "--dry", "d.wav", "--output-dir", "x"]) == 2


def test_make_corpus(tmp_path):
    assert main(["make-corpus", str(tmp_path / "c")]) == 0
    cfg = PipelineConfig.from_file(tmp_path / "c" / "config.yaml")
    assert cfg.labels == [r[0] for r in corpus.ROOMS]
    assert cfg.mds_dims == (1, 6)
    ratings = RatingSet.from_csv(tmp_path / "c" / "ratings.csv")
    assert len(ratings.subjects) == 11
