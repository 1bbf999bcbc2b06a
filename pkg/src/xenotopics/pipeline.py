"""End-to-end run: ingest, stage, classify, per-cell topic modelling, tables, manifest."""

from __future__ import annotations

import copy
import datetime as dt
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from xenotopics import classifier, coherence, corpus, lda, report, textprep, topiccluster
from xenotopics.corpus import RACIST_CATEGORIES, CategoryLabel, Stage, StageWindow, TweetRecord
from xenotopics.errors import ConfigError, PipelineError, TooFewWords

log = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    "seed": 0,
    "corpus": {"path": None, "format": None, "filter_hashtags": True, "hashtags": None},
    "stages": None,
    "classifier": {
        "source": "gold",              # gold | internal | external
        "predictions": None,
        "grid": list(classifier.DEFAULT_GRID),
        "folds": 5,
        "test_fraction": 0.1,
    },
    "lda": {"iterations": 1000, "burn_in": 100, "optimize_interval": 10},
    "coherence": {"measure": "c_v", "top_n": 10, "window": 110, "epsilon": 1.0,
                  "Ks": list(coherence.DEFAULT_KS)},
    "cluster": {"target_groups": 5},
    "report": {"min_docs": 30, "top_words": 10, "min_df": 1,
               "bigram_min_count": 5, "bigram_threshold": 10.0},
}


@dataclass(frozen=True)
class ClassifiedRecord:
    record: TweetRecord
    category: CategoryLabel
    stage: Stage


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path, seed: Optional[int] = None) -> dict:
    """Read a JSON run configuration, fill defaults, resolve paths against its directory.

    Raises ConfigError before any computation when the corpus is missing.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    unknown = set(raw) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    config = _merge(DEFAULT_CONFIG, raw)
    if seed is not None:
        config["seed"] = seed
    base = path.parent
    for section, key in (("corpus", "path"), ("classifier", "predictions"), ("corpus", "hashtags")):
        value = config[section].get(key)
        if isinstance(value, str):
            config[section][key] = str((base / value).resolve())
    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    cpath = config["corpus"]["path"]
    if not cpath:
        raise ConfigError("corpus.path is required")
    if not Path(cpath).is_file():
        raise ConfigError(f"corpus file not found: {cpath}")
    source = config["classifier"]["source"]
    if source not in ("gold", "internal", "external"):
        raise ConfigError(f"classifier.source must be gold, internal or external, not {source!r}")
    if source == "external":
        pred = config["classifier"]["predictions"]
        if not pred or not Path(pred).is_file():
            raise ConfigError(f"external predictions file not found: {pred}")
    Ks = config["coherence"]["Ks"]
    target = config["cluster"]["target_groups"]
    if not Ks or min(Ks) < target:
        raise ConfigError(f"every K in coherence.Ks must be >= cluster.target_groups ({target})")
    if config["report"]["min_docs"] < 1:
        raise ConfigError("report.min_docs must be >= 1")
    stage_windows(config)


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


def stage_windows(config: dict) -> tuple:
    windows_cfg = config.get("stages")
    if not windows_cfg:
        return corpus.DEFAULT_WINDOWS
    try:
        windows = tuple(StageWindow(Stage(w["stage"]), dt.date.fromisoformat(w["start"]),
                                    dt.date.fromisoformat(w["end"])) for w in windows_cfg)
        corpus.validate_windows(windows)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad stage windows: {exc}") from None
    return windows


def _step(name):
    """Decorator annotating any library error with the pipeline step that raised it."""
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, exc) from exc
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner
    return wrap


@_step("ingest")
def ingest(config: dict):
    """Read, hashtag-filter and stage the corpus; returns ``(staged, stats)``."""
    c = config["corpus"]
    records = corpus.ingest_corpus(c["path"], c["format"])
    stats = {"ingested": len(records)}
    if c["filter_hashtags"]:
        allowed = None
        if isinstance(c["hashtags"], list):
            allowed = c["hashtags"]
        elif isinstance(c["hashtags"], str):
            allowed = [ln for ln in Path(c["hashtags"]).read_text(encoding="utf-8").splitlines() if ln.strip()]
        records = corpus.filter_by_hashtags(records, allowed)
    stats["after_hashtag_filter"] = len(records)
    windows = stage_windows(config)
    staged = [(r, corpus.assign_stage(r, windows)) for r in records]
    staged = [(r, s) for r, s in staged if s is not None]
    stats["staged"] = len(staged)
    stats["out_of_range"] = stats["after_hashtag_filter"] - len(staged)
    return staged, stats


@_step("classify")
def classify(config: dict, staged):
    """Attach a category to every staged record.

    ``gold`` uses annotated labels; ``external`` reads an id,label file;
    ``internal`` trains the linear model on the annotated records, keeps
    their labels and predicts the rest. Returns ``(classified, info)``.
    """
    c = config["classifier"]
    info = {"source": c["source"]}
    if c["source"] == "gold":
        labels = {r.id: r.gold_category for r, _ in staged if r.gold_category is not None}
    elif c["source"] == "external":
        labels = classifier.import_external_predictions(c["predictions"])
    else:
        examples = [classifier.LabeledExample(r.id, r.text, r.gold_category)
                    for r, _ in staged if r.gold_category is not None]
        train, test = classifier.split_train_test(examples, c["test_fraction"], config["seed"])
        model = classifier.train_linear(train, c["grid"], c["folds"], config["seed"])
        preds = classifier.predict_many(model, [e.text for e in test])
        info["evaluation"] = classifier.evaluate(preds, [e.label for e in test])
        info["model"] = model
        unlabeled = [r for r, _ in staged if r.gold_category is None]
        predicted = classifier.predict_many(model, [r.text for r in unlabeled])
        labels = {e.doc_id: e.label for e in examples}
        labels.update({r.id: p for r, p in zip(unlabeled, predicted)})
    classified = [ClassifiedRecord(r, labels[r.id], s) for r, s in staged if r.id in labels]
    info["classified"] = len(classified)
    info["unlabeled"] = len(staged) - len(classified)
    return classified, info


def cell_seed(base_seed: int, category: CategoryLabel, stage: Stage) -> int:
    return base_seed + 1000 * (3 * int(category) + ("S1", "S2", "S3").index(stage.value))


@dataclass
class CellResult:
    category: CategoryLabel
    stage: Stage
    status: str                  # "ok" or "insufficient data"
    n_docs: int
    seed: int
    sweep: Optional[coherence.CoherenceReport] = None
    clusters: Optional[list] = None
    vocab: Optional[textprep.Vocabulary] = None
    reason: str = ""

    @property
    def name(self) -> str:
        return f"{self.category.label_name}_{self.stage.value}"


def run_cell(config: dict, category: CategoryLabel, stage: Stage, texts, doc_ids) -> CellResult:
    """Preprocess one (category, stage) corpus, sweep K, cluster the best model."""
    rep, lda_cfg, coh_cfg = config["report"], config["lda"], config["coherence"]
    seed = cell_seed(config["seed"], category, stage)
    with _annotate(f"topics:{category.label_name}/{stage.value}"):
        docs = textprep.topic_pipeline(texts, bigram_min_count=rep["bigram_min_count"],
                                       bigram_threshold=rep["bigram_threshold"])
        kept = [(i, d) for i, d in zip(doc_ids, docs) if d]
        result = CellResult(category, stage, "insufficient data", len(kept), seed)
        if len(kept) < rep["min_docs"]:
            result.reason = f"{len(kept)} documents < min_docs {rep['min_docs']}"
            return result
        vocab, encoded = textprep.build_vocabulary([d for _, d in kept], rep["min_df"], [i for i, _ in kept])
        encoded = [e for e in encoded if e.tokens]
        if len(vocab) < rep["top_words"] or len(encoded) < rep["min_docs"]:
            result.reason = f"vocabulary of {len(vocab)} words / {len(encoded)} documents is too small"
            return result
        template = lda.TopicModelParams(K=2, iterations=lda_cfg["iterations"], burn_in=lda_cfg["burn_in"],
                                        optimize_interval=lda_cfg["optimize_interval"], seed=seed)
        ccfg = coherence.CoherenceConfig(coh_cfg["measure"], coh_cfg["top_n"], coh_cfg["window"],
                                         coh_cfg["epsilon"])
        sweep = coherence.sweep_topic_counts(encoded, coh_cfg["Ks"], template, ccfg, len(vocab), keep_states=True)
        best = sweep.states[sweep.best_K]
        clusters = topiccluster.cluster_topics(lda.phi(best), config["cluster"]["target_groups"])
        sweep.states = {}
        result.status = "ok"
        result.sweep, result.clusters, result.vocab = sweep, clusters, vocab
        return result


class _annotate:
    def __init__(self, step):
        self.step = step

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, PipelineError) and isinstance(exc, Exception):
            raise PipelineError(self.step, exc) from exc
        return False


def build_cells(config: dict, classified) -> list:
    results = []
    for category in RACIST_CATEGORIES:
        for stage in report.STAGES:
            members = [c.record for c in classified if c.category == category and c.stage == stage]
            results.append(run_cell(config, category, stage,
                                    [r.text for r in members], [r.id for r in members]))
    return results


class ArtifactWriter:
    """Writes files under ``out`` and remembers them for the manifest."""

    def __init__(self, out):
        self.out = Path(out)
        self.entries = []

    def write(self, rel: str, text: str, step: str) -> Path:
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.entries.append({"path": rel, "step": step, "sha256": hashlib.sha256(data).hexdigest()})
        return path

    def write_json(self, rel: str, obj, step: str) -> Path:
        return self.write(rel, json.dumps(obj, indent=2, sort_keys=True) + "\n", step)


def write_cell(writer: ArtifactWriter, cell: CellResult, n_words: int):
    base = f"cells/{cell.name}"
    if cell.status != "ok":
        writer.write_json(f"{base}/status.json", {"status": cell.status, "reason": cell.reason,
                                                  "n_docs": cell.n_docs}, "topics")
        return None
    writer.write_json(f"{base}/coherence.json", cell.sweep.to_dict(), "sweep")
    writer.write_json(f"{base}/clusters.json",
                      topiccluster.clusters_to_json(cell.clusters, cell.vocab, n_words), "topics")
    try:
        table = report.topics_table({cell.stage.value: (cell.clusters, cell.vocab)}, n_words=n_words,
                                    n_topics=len(cell.clusters))
    except TooFewWords as exc:
        raise PipelineError(f"report:{cell.name}", exc) from exc
    writer.write(f"topics/{cell.name}.csv", table.to_csv(), "report")
    writer.write(f"topics/{cell.name}.md", table.to_markdown(), "report")
    return table


def run_pipeline(config_or_path, out, seed: Optional[int] = None) -> dict:
    """Execute the full run and write every artifact plus ``manifest.json`` under ``out``.

    Returns the manifest.
    """
    if isinstance(config_or_path, dict):
        config = _merge(DEFAULT_CONFIG, config_or_path)
        if seed is not None:
            config["seed"] = seed
        validate_config(config)
    else:
        config = load_config(config_or_path, seed)
    writer = ArtifactWriter(out)
    n_words = config["report"]["top_words"]

    staged, ingest_stats = ingest(config)
    log.info("ingested %d records, %d staged", ingest_stats["ingested"], ingest_stats["staged"])
    classified, cls_info = classify(config, staged)

    writer.write("predictions.csv", _predictions_csv(classified), "classify")
    if "evaluation" in cls_info:
        writer.write_json("classifier_eval.json", cls_info["evaluation"].to_dict(), "classify")
        writer.write_json("classifier_model.json", classifier.model_to_dict(cls_info["model"]), "classify")

    table = _report_step(report.distribution_table, classified)
    writer.write("distribution.md", table.to_markdown(), "report")
    writer.write("distribution.csv", table.to_csv(), "report")
    writer.write_json("distribution.json", table.to_dict(), "report")

    cells = build_cells(config, classified)
    cell_index = []
    per_category = {}
    for cell in cells:
        cell_table = write_cell(writer, cell, n_words)
        entry = {"category": cell.category.label_name, "stage": cell.stage.value, "status": cell.status,
                 "n_docs": cell.n_docs, "seed": cell.seed}
        if cell.status == "ok":
            entry["best_K"] = cell.sweep.best_K
            per_category.setdefault(cell.category, []).extend(cell_table.rows)
        cell_index.append(entry)
    for category, rows in per_category.items():
        writer.write(f"topics_{category.label_name}.md", report.TopicsTable(rows).to_markdown(), "report")

    manifest = {
        "config_hash": config_hash(config),
        "seed": config["seed"],
        "ingest": ingest_stats,
        "classification": {k: v for k, v in cls_info.items() if k in ("source", "classified", "unlabeled")},
        "cells": cell_index,
        "artifacts": writer.entries,
    }
    # the manifest describes the other artifacts and is not listed in itself
    (writer.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")
    return manifest


@_step("report")
def _report_step(fn, *args):
    return fn(*args)


def _predictions_csv(classified) -> str:
    lines = ["id,label"] + [f"{_csv_field(c.record.id)},{int(c.category)}" for c in classified]
    return "\n".join(lines) + "\n"


def _csv_field(value: str) -> str:
    if any(ch in value for ch in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value
