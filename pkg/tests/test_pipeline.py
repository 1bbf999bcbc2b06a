import json

import pytest

from conftest import make_run_dir
from xenotopics import cli, pipeline
from xenotopics.classifier import write_predictions
from xenotopics.corpus import CategoryLabel, ingest_corpus
from xenotopics.errors import ConfigError, PipelineError
from xenotopics.report import read_topics_csv


def artifact_bytes(out, manifest):
    return {a["path"]: (out / a["path"]).read_bytes() for a in manifest["artifacts"]}


class TestConfig:
    def test_missing_corpus(self, tmp_path):
        (tmp_path / "config.json").write_text(json.dumps({"corpus": {"path": "nope.jsonl"}}))
        with pytest.raises(ConfigError, match="corpus file not found"):
            pipeline.load_config(tmp_path / "config.json")

    def test_unknown_section(self, run_dir):
        cfg = json.loads(run_dir.read_text())
        cfg["extra"] = {}
        run_dir.write_text(json.dumps(cfg))
        with pytest.raises(ConfigError):
            pipeline.load_config(run_dir)

    def test_k_below_target(self, tmp_path):
        path = make_run_dir(tmp_path, per_cell=2, coherence={"Ks": [3]})
        with pytest.raises(ConfigError):
            pipeline.load_config(path)

    def test_seed_override_and_paths(self, run_dir):
        config = pipeline.load_config(run_dir, seed=99)
        assert config["seed"] == 99
        assert config["corpus"]["path"] == str(run_dir.parent.resolve() / "corpus.jsonl")
        assert config["lda"]["iterations"] == 60
        assert config["cluster"]["target_groups"] == 5

    def test_custom_stage_windows(self, run_dir):
        cfg = json.loads(run_dir.read_text())
        cfg["stages"] = [{"stage": "S1", "start": "2020-01-01", "end": "2020-02-15"},
                         {"stage": "S2", "start": "2020-02-16", "end": "2020-03-11"},
                         {"stage": "S3", "start": "2020-03-12", "end": "2020-04-30"}]
        run_dir.write_text(json.dumps(cfg))
        staged, stats = pipeline.ingest(pipeline.load_config(run_dir))
        assert stats["staged"] == len(staged) == 600

    def test_hash_is_stable(self, run_dir):
        assert pipeline.config_hash(pipeline.load_config(run_dir)) == pipeline.config_hash(pipeline.load_config(run_dir))


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    config = make_run_dir(root)
    manifest = pipeline.run_pipeline(config, root / "out")
    return root / "out", manifest


class TestRun:
    def test_twelve_topic_tables(self, finished):
        out, manifest = finished
        tables = sorted(p.name for p in (out / "topics").glob("*.csv"))
        assert len(tables) == 12
        assert all(c["status"] == "ok" for c in manifest["cells"])
        table = read_topics_csv((out / "topics" / "blame_S2.csv").read_text())
        assert len(table.rows) == 5 and all(len(r[3]) == 10 for r in table.rows)

    def test_manifest_lists_everything(self, finished):
        out, manifest = finished
        written = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
        assert written - {a["path"] for a in manifest["artifacts"]} == {"manifest.json"}
        assert json.loads((out / "manifest.json").read_text()) == manifest
        assert manifest["ingest"]["staged"] == 600
        assert manifest["classification"]["classified"] == 600
        steps = {a["step"] for a in manifest["artifacts"]}
        assert {"classify", "report", "sweep", "topics"} <= steps

    def test_distribution(self, finished):
        out, _ = finished
        dist = json.loads((out / "distribution.json").read_text())
        assert [r["total"] for r in dist["rows"]] == [120] * 4
        assert dist["none"]["total"] == 120

    def test_deterministic(self, finished, tmp_path):
        out, manifest = finished
        again = pipeline.run_pipeline(out.parent / "config.json", tmp_path / "again")
        assert artifact_bytes(out, manifest) == artifact_bytes(tmp_path / "again", again)
        assert (out / "manifest.json").read_bytes() == (tmp_path / "again" / "manifest.json").read_bytes()


class TestSources:
    def test_small_cells_marked(self, tmp_path):
        config = make_run_dir(tmp_path, per_cell=10)
        manifest = pipeline.run_pipeline(config, tmp_path / "out")
        assert all(c["status"] == "insufficient data" for c in manifest["cells"])
        assert len(list((tmp_path / "out" / "cells").glob("*/status.json"))) == 12

    def test_external_predictions(self, tmp_path):
        config = make_run_dir(tmp_path, per_cell=8, classifier={"source": "external", "predictions": "preds.csv"})
        records = ingest_corpus(tmp_path / "corpus.jsonl")
        write_predictions({r.id: CategoryLabel.BLAME for r in records}, tmp_path / "preds.csv")
        cfg = pipeline.load_config(config)
        staged, _ = pipeline.ingest(cfg)
        classified, info = pipeline.classify(cfg, staged)
        assert {c.category for c in classified} == {CategoryLabel.BLAME}
        assert info["unlabeled"] == 0

    def test_internal_classifier(self, tmp_path):
        config = make_run_dir(tmp_path, per_cell=20, labeled_fraction=0.6,
                              classifier={"source": "internal", "grid": [1.0, 10.0], "folds": 3})
        cfg = pipeline.load_config(config)
        staged, _ = pipeline.ingest(cfg)
        classified, info = pipeline.classify(cfg, staged)
        assert len(classified) == len(staged) == 300
        assert info["evaluation"].accuracy > 0.5
        gold = {r.id: r.gold_category for r, _ in staged if r.gold_category is not None}
        assert all(c.category == gold[c.record.id] for c in classified if c.record.id in gold)

    def test_errors_carry_step(self, tmp_path):
        config = make_run_dir(tmp_path, per_cell=8, classifier={"source": "internal"}, labeled_fraction=0.0)
        with pytest.raises(PipelineError) as info:
            pipeline.run_pipeline(config, tmp_path / "out")
        assert info.value.step == "classify"


class TestCli:
    def test_report(self, run_dir, capsys):
        assert cli.main(["report", "--config", str(run_dir), "--out", str(run_dir.parent / "o")]) == 0
        assert "| Stigmatization | 120 | 40 | 40 | 40 |" in capsys.readouterr().out

    def test_ingest(self, run_dir, capsys):
        out = run_dir.parent / "o"
        assert cli.main(["ingest", "--config", str(run_dir), "--out", str(out)]) == 0
        assert len((out / "staged.jsonl").read_text().splitlines()) == 600

    def test_sweep_and_topics_subset(self, run_dir, capsys):
        out = run_dir.parent / "o"
        assert cli.main(["sweep", "--config", str(run_dir), "--out", str(out), "--category", "blame",
                         "--stage", "S1"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert list(result) == ["blame_S1"] and result["blame_S1"]["best_K"] in (5, 7)
        assert cli.main(["topics", "--config", str(run_dir), "--out", str(out), "--category", "3"]) == 0
        assert sorted(p.name for p in (out / "topics").glob("*.csv")) == [
            "exclusion_S1.csv", "exclusion_S2.csv", "exclusion_S3.csv"]

    def test_classify_and_evaluate(self, run_dir, capsys):
        out = run_dir.parent / "o"
        assert cli.main(["classify", "--config", str(run_dir), "--out", str(out)]) == 0
        capsys.readouterr()
        assert cli.main(["evaluate", "--config", str(run_dir), "--out", str(out),
                         "--predictions", str(out / "predictions.csv")]) == 0
        assert json.loads(capsys.readouterr().out)["accuracy"] == 1.0

    def test_run(self, tmp_path, capsys):
        config = make_run_dir(tmp_path, per_cell=10)
        assert cli.main(["run", "--config", str(config), "--out", str(tmp_path / "o"), "--seed", "3"]) == 0
        assert json.loads((tmp_path / "o" / "manifest.json").read_text())["seed"] == 3

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["report", "--config", str(tmp_path / "missing.json")]) == 1
        assert "error:" in capsys.readouterr().err
