import json
import sys

import pytest

from xenotopics.corpus import write_corpus
from xenotopics.synthetic import synthetic_tweets

FAST_CONFIG = {
    "seed": 7,
    "corpus": {"path": "corpus.jsonl"},
    "classifier": {"source": "gold"},
    "lda": {"iterations": 60, "burn_in": 20, "optimize_interval": 10},
    "coherence": {"Ks": [5, 7]},
    "report": {"min_docs": 20},
}


def make_run_dir(path, per_cell=40, labeled_fraction=1.0, seed=0, **overrides):
    """Write a synthetic corpus and a fast config into ``path``; return the config path."""
    records = synthetic_tweets(per_cell=per_cell, labeled_fraction=labeled_fraction, seed=seed)
    write_corpus(records, path / "corpus.jsonl", "jsonl")
    config = json.loads(json.dumps(FAST_CONFIG))
    for section, values in overrides.items():
        if isinstance(values, dict):
            config.setdefault(section, {}).update(values)
        else:
            config[section] = values
    (path / "config.json").write_text(json.dumps(config))
    return path / "config.json"


@pytest.fixture
def run_dir(tmp_path):
    return make_run_dir(tmp_path)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda ln: int(ln.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
