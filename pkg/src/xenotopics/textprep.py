"""Text cleaning for the classifier and the topic models, bigram phrases, lemmas, vocabularies."""

from __future__ import annotations

import functools
import re
import sys
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

from xenotopics.errors import EmptyVocabulary

URL_RE = re.compile(r"(?:[a-zA-Z][a-zA-Z0-9+.\-]*://|www\.)\S*", re.IGNORECASE)
MENTION_RE = re.compile(r"@\w+")
HASHTAG_TOKEN_RE = re.compile(r"#\w+")
NEWLINE_RE = re.compile(r"[\r\n\x0b\x0c\x85\u2028\u2029]+")

EXTRA_SYMBOLS = "$+<=>^`|~"


@functools.lru_cache(maxsize=None)
def _punctuation_table() -> dict:
    table = {}
    for cp in range(sys.maxunicode + 1):
        ch = chr(cp)
        if unicodedata.category(ch).startswith("P") or ch in EXTRA_SYMBOLS:
            table[cp] = None
    return table


def strip_punctuation(text: str) -> str:
    return text.translate(_punctuation_table())


def strip_urls(text: str) -> str:
    return URL_RE.sub(" ", text)


def prep_for_classifier(text: str) -> str:
    """Remove URLs and punctuation, lowercase and collapse whitespace."""
    text = strip_urls(text)
    text = strip_punctuation(text).lower()
    return " ".join(text.split())


def prep_for_topics(text: str, stopwords: Optional[Iterable[str]] = None) -> list:
    """Clean a tweet for topic modelling and split it into tokens.

    Newlines, URLs, @-mentions and #-hashtags go first, then punctuation.
    Stopwords and tokens shorter than two characters are dropped.
    """
    stopwords = STOPWORDS if stopwords is None else stopwords
    text = NEWLINE_RE.sub(" ", text)
    text = strip_urls(text)
    text = MENTION_RE.sub(" ", text)
    text = HASHTAG_TOKEN_RE.sub(" ", text)
    text = strip_punctuation(text).lower()
    return [tok for tok in text.split() if len(tok) >= 2 and tok not in stopwords]


def load_stopwords(path=None) -> frozenset:
    """Load a stopword list (one word per line).

    Apostrophe forms like "don't" also match their punctuation-stripped
    spelling, because cleaning deletes the apostrophe before the lookup.
    """
    if path is None:
        text = resources.files("xenotopics").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = {line.strip().lower() for line in text.splitlines() if line.strip()}
    return frozenset(words | {strip_punctuation(w) for w in words if strip_punctuation(w)})


def load_lemma_table(path=None) -> dict:
    if path is None:
        text = resources.files("xenotopics").joinpath("data/lemmas.tsv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    table = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"lemma table line {lineno}: expected 'inflected<TAB>lemma'")
        table[parts[0].strip()] = parts[1].strip()
    return table


STOPWORDS = load_stopwords()
LEMMAS = load_lemma_table()


# ---------------------------------------------------------------------------
# bigrams


@dataclass
class BigramTable:
    unigram_counts: Counter = field(default_factory=Counter)
    pair_counts: Counter = field(default_factory=Counter)
    total_tokens: int = 0
    min_count: int = 5
    threshold: float = 10.0
    phrases: frozenset = frozenset()

    def score(self, a: str, b: str) -> float:
        pair = self.pair_counts.get((a, b), 0)
        ca, cb = self.unigram_counts.get(a, 0), self.unigram_counts.get(b, 0)
        if ca == 0 or cb == 0:
            return float("-inf")
        return (pair - self.min_count) * self.total_tokens / (ca * cb)

    def qualifies(self, a: str, b: str) -> bool:
        return (a, b) in self.phrases


def detect_bigrams(docs: Iterable[Sequence[str]], min_count: int = 5, threshold: float = 10.0) -> BigramTable:
    """Count unigrams and adjacent pairs, then record the pairs that pass the collocation score."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    table = BigramTable(min_count=min_count, threshold=threshold)
    for doc in docs:
        table.unigram_counts.update(doc)
        table.pair_counts.update(zip(doc, doc[1:]))
        table.total_tokens += len(doc)
    table.phrases = frozenset(
        pair for pair, n in table.pair_counts.items()
        if n >= min_count and table.score(*pair) > threshold
    )
    return table


def apply_bigrams(doc: Sequence[str], table: BigramTable) -> list:
    out = []
    i = 0
    while i < len(doc):
        if i + 1 < len(doc) and table.qualifies(doc[i], doc[i + 1]):
            out.append(f"{doc[i]}_{doc[i + 1]}")
            i += 2
        else:
            out.append(doc[i])
            i += 1
    return out


# ---------------------------------------------------------------------------
# lemmas

MIN_STEM = 3
_VOWELS = set("aeiou")


def _undouble(stem: str) -> str:
    # running -> run, stopped -> stop; keep ll/ss/zz (calling, missed)
    if len(stem) > MIN_STEM and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    return stem


def _lemma_by_rules(tok: str) -> str:
    if tok.endswith("ies") and len(tok) - 3 >= MIN_STEM:
        return tok[:-3] + "y"
    if tok.endswith("es") and len(tok) - 2 >= MIN_STEM and tok[:-2].endswith(("s", "x", "z", "ch", "sh")):
        return tok[:-2]
    if tok.endswith("s") and not tok.endswith(("ss", "us", "is")) and len(tok) - 1 >= MIN_STEM:
        return tok[:-1]
    if tok.endswith("ing") and len(tok) - 3 >= MIN_STEM:
        stem = tok[:-3]
        if any(c in _VOWELS for c in stem):
            return _undouble(stem)
    if tok.endswith("ed") and len(tok) - 2 >= MIN_STEM:
        stem = tok[:-2]
        if any(c in _VOWELS for c in stem):
            return _undouble(stem)
    return tok


def lemmatize(tokens: Iterable[str], table: Optional[dict] = None) -> list:
    """Map each token to its lemma: table lookup first, then suffix rules."""
    table = LEMMAS if table is None else table
    return [table[tok] if tok in table else _lemma_by_rules(tok) for tok in tokens]


# ---------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class TokenizedDoc:
    doc_id: str
    tokens: tuple


class Vocabulary:
    """Dense bijection between token strings and ids 0..V-1."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.id_to_token = []
        self.token_to_id = {}
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        idx = self.token_to_id.get(token)
        if idx is None:
            idx = len(self.id_to_token)
            self.token_to_id[token] = idx
            self.id_to_token.append(token)
        return idx

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def encode(self, tokens: Iterable[str]) -> tuple:
        """Encode tokens, silently dropping those outside the vocabulary."""
        lookup = self.token_to_id
        return tuple(lookup[t] for t in tokens if t in lookup)

    def decode(self, ids: Iterable[int]) -> list:
        return [self.id_to_token[i] for i in ids]

    def to_list(self) -> list:
        return list(self.id_to_token)


def build_vocabulary(docs: Sequence[Sequence[str]], min_df: int = 1, doc_ids: Optional[Sequence[str]] = None):
    """Build a vocabulary of tokens found in at least ``min_df`` documents and encode the docs.

    Ids follow first appearance. Returns ``(vocab, encoded_docs)``.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    vocab = Vocabulary()
    for doc in docs:
        for tok in doc:
            if df[tok] >= min_df:
                vocab.add(tok)
    if len(vocab) == 0:
        raise EmptyVocabulary(f"no token appears in >= {min_df} documents")
    if doc_ids is None:
        doc_ids = [str(i) for i in range(len(docs))]
    encoded = [TokenizedDoc(did, vocab.encode(doc)) for did, doc in zip(doc_ids, docs)]
    return vocab, encoded


def topic_pipeline(texts: Sequence[str], stopwords=None, lemma_table=None,
                   bigram_min_count: int = 5, bigram_threshold: float = 10.0) -> list:
    """Full topic-model preprocessing: clean, detect and join bigrams, lemmatize."""
    docs = [prep_for_topics(t, stopwords) for t in texts]
    table = detect_bigrams(docs, bigram_min_count, bigram_threshold)
    return [lemmatize(apply_bigrams(doc, table), lemma_table) for doc in docs]
