"""Topic coherence (c_v and UMass) and topic-count selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from xenotopics import lda
from xenotopics.errors import UnknownToken

NPMI_EPS = 1e-12
DEFAULT_KS = (5, 10, 15, 20, 25)


@dataclass(frozen=True)
class CoherenceConfig:
    measure: str = "c_v"
    top_n: int = 10
    window: int = 110
    epsilon: float = 1.0

    def __post_init__(self):
        if self.measure not in ("c_v", "u_mass"):
            raise ValueError(f"unknown coherence measure {self.measure!r}")
        if self.top_n < 2:
            raise ValueError("top_n must be >= 2")
        if self.window < 2:
            raise ValueError("window must be >= 2")


@dataclass
class CoherenceReport:
    entries: list                 # (K, coherence, seed) tuples
    best_K: int
    states: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "entries": [{"K": k, "coherence": c, "seed": s} for k, c, s in self.entries],
            "best_K": self.best_K,
        }


def _token_ids(doc):
    return doc.tokens if hasattr(doc, "tokens") else doc


def _relevant_index(topics) -> dict:
    index = {}
    for topic in topics:
        for w in topic:
            index.setdefault(int(w), len(index))
    return index


# ---------------------------------------------------------------------------
# UMass


def document_counts(docs, word_ids: Sequence[int]):
    """Document frequencies and pairwise co-document frequencies of ``word_ids``."""
    index = {w: i for i, w in enumerate(word_ids)}
    rows, cols = [], []
    for d, doc in enumerate(docs):
        present = {index[w] for w in _token_ids(doc) if w in index}
        rows.extend([d] * len(present))
        cols.extend(present)
    X = sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)),
                          shape=(len(docs), len(word_ids)))
    co = (X.T @ X).toarray()
    return np.diag(co).copy(), co


def umass_topic(topic: Sequence[int], df: np.ndarray, co: np.ndarray, index: dict, epsilon: float) -> float:
    """Sum over ranked pairs of log((D(later, earlier) + eps) / D(earlier))."""
    total = 0.0
    for j in range(1, len(topic)):
        later = index[int(topic[j])]
        for i in range(j):
            earlier = index[int(topic[i])]
            total += math.log((co[later, earlier] + epsilon) / df[earlier])
    return total


def umass_coherence(topics, docs, epsilon: float = 1.0) -> float:
    """Mean UMass coherence over topics given as ranked word-id lists."""
    index = _relevant_index(topics)
    words = list(index)
    df, co = document_counts(docs, words)
    missing = [w for w, n in zip(words, df) if n == 0]
    if missing:
        raise UnknownToken(f"topic words never occur in the corpus: {missing[:5]}")
    return float(np.mean([umass_topic(t, df, co, index, epsilon) for t in topics]))


# ---------------------------------------------------------------------------
# c_v


def window_counts(docs, word_ids: Sequence[int], window: int):
    """Count boolean sliding windows containing each word and each word pair.

    A document no longer than ``window`` forms a single window; a longer one
    yields ``len - window + 1`` windows. Empty documents yield none.

    Returns ``(num_windows, occurrences, cooccurrences)``.
    """
    index = {w: i for i, w in enumerate(word_ids)}
    R = len(word_ids)
    num_windows = 0
    blocks = []
    short_rows, short_cols = [], []
    n_short = 0
    for doc in docs:
        toks = _token_ids(doc)
        L = len(toks)
        if L == 0:
            continue
        if L <= window:
            present = {index[w] for w in toks if w in index}
            short_rows.extend([n_short] * len(present))
            short_cols.extend(present)
            n_short += 1
            num_windows += 1
            continue
        n_win = L - window + 1
        num_windows += n_win
        mapped = np.array([index.get(int(w), -1) for w in toks])
        present = np.unique(mapped[mapped >= 0])
        if present.size == 0:
            continue
        # prefix[r, p] = occurrences of word r among the first p tokens
        hits = (mapped[None, :] == present[:, None]).astype(np.int64)
        prefix = np.zeros((present.size, L + 1), dtype=np.int64)
        np.cumsum(hits, axis=1, out=prefix[:, 1:])
        inside = (prefix[:, window:window + n_win] - prefix[:, :n_win]) > 0
        r_idx, w_idx = np.nonzero(inside)
        blocks.append(sparse.csr_matrix(
            (np.ones(r_idx.size, dtype=np.int64), (w_idx, present[r_idx])), shape=(n_win, R)))
    if n_short:
        blocks.append(sparse.csr_matrix(
            (np.ones(len(short_rows), dtype=np.int64), (short_rows, short_cols)), shape=(n_short, R)))
    co = np.zeros((R, R), dtype=np.int64)
    for X in blocks:
        co += (X.T @ X).toarray()
    return num_windows, np.diag(co).copy(), co


def npmi(co: float, occ_a: float, occ_b: float, num_windows: int, eps: float = NPMI_EPS) -> float:
    """Normalized PMI from window counts.

    Zero co-occurrence gives -1; a pair present in every window gives 1.
    """
    if co == 0:
        return -1.0
    if co >= num_windows:
        return 1.0
    p_ab = co / num_windows
    pmi = math.log(p_ab + eps) - math.log(occ_a / num_windows) - math.log(occ_b / num_windows)
    return pmi / -math.log(p_ab + eps)


def npmi_matrix(topic: Sequence[int], num_windows: int, occ: np.ndarray, co: np.ndarray, index: dict) -> np.ndarray:
    idx = [index[int(w)] for w in topic]
    n = len(idx)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = npmi(co[idx[i], idx[j]], occ[idx[i]], occ[idx[j]], num_windows)
    return out


def cv_topic(npmi_mat: np.ndarray) -> float:
    """Mean cosine between each word's NPMI context vector and the topic's summed vector."""
    total = npmi_mat.sum(axis=0)
    total_norm = np.linalg.norm(total)
    sims = []
    for row in npmi_mat:
        denom = np.linalg.norm(row) * total_norm
        sims.append(float(row @ total / denom) if denom > 0 else 0.0)
    return float(np.mean(sims))


def cv_coherence(topics, docs, window: int = 110) -> float:
    """Mean c_v coherence over topics given as word-id lists."""
    index = _relevant_index(topics)
    num_windows, occ, co = window_counts(docs, list(index), window)
    missing = [w for w, n in zip(index, occ) if n == 0]
    if missing:
        raise UnknownToken(f"topic words never occur in the corpus: {missing[:5]}")
    return float(np.mean([cv_topic(npmi_matrix(t, num_windows, occ, co, index)) for t in topics]))


def topic_coherence(topics, docs, config: CoherenceConfig) -> float:
    if config.measure == "c_v":
        return cv_coherence(topics, docs, config.window)
    return umass_coherence(topics, docs, config.epsilon)


# ---------------------------------------------------------------------------
# topic-count sweep


def seed_for_k(base_seed: int, K: int) -> int:
    return base_seed + K


def best_k(entries) -> int:
    """K with the highest coherence; ties go to the smaller K."""
    return min(entries, key=lambda e: (-e[1], e[0]))[0]


def sweep_topic_counts(docs, Ks: Sequence[int] = DEFAULT_KS, template: Optional[lda.TopicModelParams] = None,
                       config: Optional[CoherenceConfig] = None, vocab_size: Optional[int] = None,
                       keep_states: bool = False) -> CoherenceReport:
    """Train one model per K and score its top words on the training corpus.

    The template supplies everything except K, alpha and beta; each run
    gets the seed ``template.seed + K`` and the 1/K priors.
    """
    if not Ks:
        raise ValueError("Ks must be nonempty")
    template = template or lda.TopicModelParams(K=2)
    config = config or CoherenceConfig()
    entries, states = [], {}
    for K in Ks:
        params = replace(template, K=K, alpha=None, beta=None, seed=seed_for_k(template.seed, K))
        state = lda.train(docs, params, vocab_size)
        top_n = min(config.top_n, state.vocab_size)
        topics = lda.top_word_ids(lda.phi(state), top_n)
        entries.append((K, topic_coherence(topics, docs, config), params.seed))
        if keep_states:
            states[K] = state
    return CoherenceReport(entries, best_k(entries), states)
