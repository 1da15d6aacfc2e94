"""Configuration loading and the staged command-line interface."""

import json

import pytest

from opinionrec import cli, pipeline
from opinionrec.config import ConfigError, PipelineConfig, from_dict, load_config


class TestConfig:
    def test_seed_mandatory(self):
        with pytest.raises(ConfigError):
            from_dict({"epochs": 3})

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            from_dict({"seed": 1, "nonsense": 2})

    @pytest.mark.parametrize("field,value", [("seed", -1), ("epochs", 0), ("dropout", 1.0),
                                             ("alpha", 1.5), ("train_fraction", 1.0),
                                             ("lr", 0.0), ("widths", [5]), ("seed", True)])
    def test_validation(self, field, value):
        with pytest.raises(ConfigError):
            from_dict({"seed": 1, field: value})

    def test_relative_paths_resolve_against_file(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"seed": 1, "dataset": "r.jsonl"}))
        cfg = load_config(tmp_path / "c.json")
        assert cfg.dataset == str(tmp_path / "r.jsonl")

    def test_overrides(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"seed": 1}))
        cfg = load_config(tmp_path / "c.json", {"seed": 9, "out": "elsewhere", "epochs": None})
        assert cfg.seed == 9 and cfg.out == "elsewhere" and cfg.epochs == 10

    def test_hash_ignores_output_only(self):
        a, b = PipelineConfig(seed=1, out="x"), PipelineConfig(seed=1, out="y")
        assert a.hash() == b.hash()
        assert a.hash() != PipelineConfig(seed=2).hash()

    def test_missing_and_invalid_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.json")

    def test_require(self, tmp_path):
        cfg = PipelineConfig(seed=1, dataset=str(tmp_path / "missing"))
        with pytest.raises(ConfigError):
            cfg.require("dataset")
        with pytest.raises(ConfigError):
            cfg.require("embeddings")


def _run(bundle, out, *args):
    return cli.main(["--config", str(bundle["config"]), "--out", str(out), *args])


STAGE_FILES = [pipeline.CORPUS, pipeline.VOCAB, pipeline.MODEL, pipeline.ASPECTS,
               pipeline.RATING_MODEL, pipeline.RECOMMENDATIONS, pipeline.METRICS, "model.bin",
               "rating_model.bin"]


class TestCli:
    def test_pipeline_equals_individual_stages(self, small_bundle, tmp_path, capsys):
        assert _run(small_bundle, tmp_path / "all", "pipeline") == cli.EXIT_OK
        for stage in ("preprocess", "train", "extract", "recommend", "evaluate"):
            assert _run(small_bundle, tmp_path / "each", stage) == cli.EXIT_OK
        for name in STAGE_FILES:
            assert (tmp_path / "all" / name).read_bytes() == \
                (tmp_path / "each" / name).read_bytes(), name
        out = capsys.readouterr().out
        assert "preprocess: 120 records" in out

    def test_metrics_report(self, small_bundle, tmp_path):
        assert _run(small_bundle, tmp_path, "pipeline") == 0
        metrics = json.loads((tmp_path / pipeline.METRICS).read_text())
        assert {"mae", "rmse", "precision", "recall", "f1", "accuracy", "n_test"} <= set(metrics)
        assert metrics["n_test"] == 24
        assert metrics["rmse"] >= metrics["mae"]

    def test_recommend_single_user(self, small_bundle, tmp_path):
        assert _run(small_bundle, tmp_path, "pipeline") == 0
        assert _run(small_bundle, tmp_path, "recommend", "--user", "U0000", "-n", "3") == 0
        lines = (tmp_path / pipeline.RECOMMENDATIONS).read_text().splitlines()
        assert lines[0].split("\t") == ["user", "item", "rank", "predicted_rating"]
        rows = [line.split("\t") for line in lines[1:]]
        assert len(rows) == 3 and {r[0] for r in rows} == {"U0000"}
        assert [int(r[2]) for r in rows] == [1, 2, 3]
        assert all(1.0 <= float(r[3]) <= 5.0 for r in rows)

    def test_stage_out_of_order(self, small_bundle, tmp_path, capsys):
        assert _run(small_bundle, tmp_path, "extract") == cli.EXIT_IO
        assert "run stage preprocess first" in capsys.readouterr().err

    def test_seed_mismatch(self, small_bundle, tmp_path):
        assert _run(small_bundle, tmp_path, "preprocess") == 0
        assert _run(small_bundle, tmp_path, "--seed", "99", "train") == cli.EXIT_CONFIG

    def test_config_errors(self, small_bundle, tmp_path):
        bad = tmp_path / "c.json"
        bad.write_text(json.dumps({"dataset": str(small_bundle["dataset"])}))
        assert cli.main(["--config", str(bad), "preprocess"]) == cli.EXIT_CONFIG
        bad.write_text(json.dumps({"seed": 1, "dataset": str(small_bundle["dataset"]),
                                   "aspect_terms": str(small_bundle["aspect_terms"]),
                                   "embeddings": str(tmp_path / "none.txt")}))
        assert cli.main(["--config", str(bad), "--out", str(tmp_path), "pipeline"]) == \
            cli.EXIT_CONFIG

    def test_malformed_dataset(self, small_bundle, tmp_path):
        data = tmp_path / "r.jsonl"
        data.write_text("{\n[\nnot json\n")
        cfg = json.loads(small_bundle["config"].read_text())
        cfg.update(dataset=str(data), embeddings=str(small_bundle["embeddings"]),
                   aspect_terms=str(small_bundle["aspect_terms"]))
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert cli.main(["--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o"),
                         "preprocess"]) == cli.EXIT_DATA

    def test_parser_requires_stage(self):
        with pytest.raises(SystemExit):
            cli.main([])
