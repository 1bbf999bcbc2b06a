"""Command line entry point: ``xenotopics <command> --config run.json --out DIR``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from xenotopics import classifier, corpus, pipeline, report
from xenotopics.errors import XenoTopicsError


def _cmd_ingest(config, args):
    staged, stats = pipeline.ingest(config)
    writer = pipeline.ArtifactWriter(args.out)
    lines = []
    for rec, stage in staged:
        row = {"id": rec.id, "created_at": rec.created_at.isoformat(), "stage": stage.value,
               "text": rec.text, "hashtags": sorted(rec.hashtags),
               "label": None if rec.gold_category is None else int(rec.gold_category)}
        lines.append(json.dumps(row, ensure_ascii=False, sort_keys=True))
    writer.write("staged.jsonl", "\n".join(lines) + ("\n" if lines else ""), "ingest")
    return stats


def _cmd_classify(config, args):
    staged, _ = pipeline.ingest(config)
    classified, info = pipeline.classify(config, staged)
    writer = pipeline.ArtifactWriter(args.out)
    writer.write("predictions.csv", pipeline._predictions_csv(classified), "classify")
    out = {k: info[k] for k in ("source", "classified", "unlabeled")}
    if "evaluation" in info:
        writer.write_json("classifier_eval.json", info["evaluation"].to_dict(), "classify")
        writer.write_json("classifier_model.json", classifier.model_to_dict(info["model"]), "classify")
        out["evaluation"] = info["evaluation"].to_dict()
    return out


def _cmd_evaluate(config, args):
    if not args.predictions:
        raise SystemExit("evaluate needs --predictions")
    preds = classifier.import_external_predictions(args.predictions)
    records = corpus.ingest_corpus(config["corpus"]["path"], config["corpus"]["format"])
    pairs = [(preds[r.id], r.gold_category) for r in records
             if r.gold_category is not None and r.id in preds]
    rep = classifier.evaluate([p for p, _ in pairs], [g for _, g in pairs])
    Path(args.out).mkdir(parents=True, exist_ok=True)
    classifier.write_eval_report(rep, Path(args.out) / "evaluation.json")
    return rep.to_dict()


def _cells(config, args):
    staged, _ = pipeline.ingest(config)
    classified, _ = pipeline.classify(config, staged)
    cats = [c for c in corpus.RACIST_CATEGORIES if args.category in (None, c.label_name, str(int(c)))]
    stages = [s for s in report.STAGES if args.stage in (None, s.value)]
    cells = []
    for cat in cats:
        for stage in stages:
            members = [c.record for c in classified if c.category == cat and c.stage == stage]
            cells.append(pipeline.run_cell(config, cat, stage, [r.text for r in members],
                                           [r.id for r in members]))
    return cells


def _cmd_sweep(config, args):
    writer = pipeline.ArtifactWriter(args.out)
    summary = {}
    for cell in _cells(config, args):
        if cell.status == "ok":
            writer.write_json(f"cells/{cell.name}/coherence.json", cell.sweep.to_dict(), "sweep")
            summary[cell.name] = cell.sweep.to_dict()
        else:
            summary[cell.name] = {"status": cell.status, "reason": cell.reason}
    return summary


def _cmd_topics(config, args):
    writer = pipeline.ArtifactWriter(args.out)
    summary = {}
    for cell in _cells(config, args):
        pipeline.write_cell(writer, cell, config["report"]["top_words"])
        summary[cell.name] = cell.status
    return summary


def _cmd_report(config, args):
    staged, _ = pipeline.ingest(config)
    classified, _ = pipeline.classify(config, staged)
    table = report.distribution_table(classified)
    writer = pipeline.ArtifactWriter(args.out)
    writer.write("distribution.md", table.to_markdown(), "report")
    writer.write("distribution.csv", table.to_csv(), "report")
    writer.write_json("distribution.json", table.to_dict(), "report")
    print(table.to_markdown())
    return table.to_dict()


def _cmd_run(config, args):
    manifest = pipeline.run_pipeline(config, args.out)
    return {"artifacts": len(manifest["artifacts"]), "cells": manifest["cells"]}


COMMANDS = {
    "ingest": (_cmd_ingest, "read, hashtag-filter and stage the corpus"),
    "classify": (_cmd_classify, "label records (gold, internal model or external predictions)"),
    "evaluate": (_cmd_evaluate, "score an id,label predictions file against gold labels"),
    "sweep": (_cmd_sweep, "coherence sweep over topic counts per category/stage"),
    "topics": (_cmd_topics, "train, cluster and tabulate topics per category/stage"),
    "report": (_cmd_report, "category by stage distribution table"),
    "run": (_cmd_run, "full pipeline with manifest"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--out", default="out", help="artifact directory (default: out)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="xenotopics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name in ("sweep", "topics"):
            p.add_argument("--category", default=None, help="category name or code (default: all four)")
            p.add_argument("--stage", default=None, choices=["S1", "S2", "S3"])
        if name == "evaluate":
            p.add_argument("--predictions", required=True, help="id,label CSV to score")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = pipeline.load_config(args.config, args.seed)
        result = COMMANDS[args.command][0](config, args)
    except XenoTopicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
