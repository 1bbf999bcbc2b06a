"""Presentation tables: category by stage counts, classifier scores, topic keywords."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from xenotopics.corpus import RACIST_CATEGORIES, CategoryLabel, Stage
from xenotopics.errors import TooFewWords, UnstagedRecord
from xenotopics.topiccluster import top_words

STAGES = (Stage.S1, Stage.S2, Stage.S3)


@dataclass
class StageCategoryTable:
    counts: dict                              # CategoryLabel -> {Stage: int}
    none_count: int = 0
    none_by_stage: dict = field(default_factory=dict)

    def total(self, category) -> int:
        return sum(self.counts[category].values())

    def check(self) -> None:
        for cat in RACIST_CATEGORIES:
            row = self.counts[cat]
            assert self.total(cat) == row[Stage.S1] + row[Stage.S2] + row[Stage.S3]

    def rows(self) -> list:
        """``(name, total, s1, s2, s3)`` per racist/xenophobic category."""
        self.check()
        out = []
        for cat in RACIST_CATEGORIES:
            row = self.counts[cat]
            out.append((cat.label_name.capitalize(), self.total(cat), row[Stage.S1], row[Stage.S2], row[Stage.S3]))
        return out

    def to_dict(self) -> dict:
        return {
            "rows": [dict(zip(("category", "total", "S1", "S2", "S3"), r)) for r in self.rows()],
            "none": {"total": self.none_count, **{s.value: self.none_by_stage.get(s, 0) for s in STAGES}},
        }

    def to_markdown(self) -> str:
        lines = ["| Category | Total | S1 | S2 | S3 |", "|---|---:|---:|---:|---:|"]
        for name, total, s1, s2, s3 in self.rows():
            lines.append(f"| {name} | {total} | {s1} | {s2} | {s3} |")
        lines.append("")
        lines.append(f"Non-racist/non-xenophobic tweets (excluded): {self.none_count}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["category", "total", "S1", "S2", "S3"])
        writer.writerows(self.rows())
        return buf.getvalue()


def distribution_table(records: Iterable) -> StageCategoryTable:
    """Count records per (category, stage).

    Each record is a ``(category, stage)`` pair or an object exposing
    ``category`` and ``stage``. The "none" category is tallied separately.
    """
    counts = {cat: {s: 0 for s in STAGES} for cat in RACIST_CATEGORIES}
    none_by_stage = {s: 0 for s in STAGES}
    for rec in records:
        category, stage = (rec.category, rec.stage) if hasattr(rec, "category") else rec
        if stage is None:
            raise UnstagedRecord(f"record without stage: {rec!r}")
        stage = Stage(stage)
        category = CategoryLabel(int(category))
        if category == CategoryLabel.NONE:
            none_by_stage[stage] += 1
        else:
            counts[category][stage] += 1
    table = StageCategoryTable(counts, sum(none_by_stage.values()), none_by_stage)
    table.check()
    return table


def performance_table(results: Mapping[str, object]) -> str:
    """Markdown table of accuracy (percent) and weighted F1 per technique."""
    lines = ["| Technique | Accuracy(%) | F1-score |", "|---|---:|---:|"]
    for name, rep in results.items():
        lines.append(f"| {name} | {100 * rep.accuracy:.0f} | {rep.weighted_f1:.2f} |")
    return "\n".join(lines) + "\n"


@dataclass
class TopicsTable:
    rows: list        # (stage, topic label "T1", human label or "", [words])

    def to_markdown(self) -> str:
        if not self.rows:
            return ""
        n = len(self.rows[0][3])
        lines = ["| Stage | Topic | " + " | ".join(f"w{i + 1}" for i in range(n)) + " |",
                 "|---|---|" + "---|" * n]
        for stage, tid, label, words in self.rows:
            name = f"{tid}.{label}" if label else tid
            lines.append(f"| {stage} | {name} | " + " | ".join(words) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = len(self.rows[0][3]) if self.rows else 0
        writer.writerow(["stage", "topic", "label"] + [f"w{i + 1}" for i in range(n)])
        for stage, tid, label, words in self.rows:
            writer.writerow([stage, tid, label] + list(words))
        return buf.getvalue()


def read_topics_csv(text: str) -> TopicsTable:
    reader = csv.reader(io.StringIO(text))
    next(reader, None)
    return TopicsTable([(r[0], r[1], r[2], r[3:]) for r in reader if r])


def topics_table(stages: Mapping, labels: Optional[Mapping] = None, n_words: int = 10,
                 n_topics: int = 5) -> TopicsTable:
    """Keyword rows T1..Tn for every stage.

    ``stages`` maps a stage name to ``(clusters, vocab)``; ``labels``
    optionally maps a stage name to per-topic human labels.
    """
    rows = []
    for stage, (clusters, vocab) in stages.items():
        stage = Stage(stage).value
        if len(clusters) != n_topics:
            raise ValueError(f"stage {stage}: expected {n_topics} clusters, got {len(clusters)}")
        names = (labels or {}).get(stage) or [""] * n_topics
        for i, cluster in enumerate(clusters):
            if len(cluster.word_probs) < n_words:
                raise TooFewWords(f"stage {stage} topic T{i + 1}: vocabulary has "
                                  f"{len(cluster.word_probs)} words, need {n_words}")
            rows.append((stage, f"T{i + 1}", names[i], top_words(cluster, n_words, vocab)))
    return TopicsTable(rows)
