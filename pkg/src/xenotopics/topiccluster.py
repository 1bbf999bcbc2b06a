"""Grouping of related topics and merging each group into one averaged topic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import rel_entr

from xenotopics.errors import NotNormalized
from xenotopics.lda import top_word_ids

NORM_TOL = 1e-6


@dataclass(frozen=True)
class TopicGrouping:
    groups: tuple   # tuple of sorted tuples of topic indices, ordered by smallest member

    def __post_init__(self):
        members = [i for g in self.groups for i in g]
        if not self.groups or any(len(g) == 0 for g in self.groups):
            raise ValueError("grouping needs at least one nonempty cell")
        if len(set(members)) != len(members) or sorted(members) != list(range(len(members))):
            raise ValueError("groups must partition 0..K-1")

    @property
    def K(self) -> int:
        return sum(len(g) for g in self.groups)

    def __len__(self):
        return len(self.groups)


@dataclass
class ClusteredTopic:
    word_probs: np.ndarray      # dense over token ids
    members: frozenset

    def top_ids(self, n: int) -> np.ndarray:
        return top_word_ids(self.word_probs, n)[0]


def _check_distribution(p: np.ndarray) -> None:
    if np.any(p < 0) or abs(p.sum() - 1.0) > NORM_TOL:
        raise NotNormalized(f"row sums to {p.sum():.9g}, expected 1")


def topic_distance(p, q) -> float:
    """Jensen-Shannon divergence (natural log) between two distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _check_distribution(p)
    _check_distribution(q)
    m = 0.5 * (p + q)
    jsd = 0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum()
    return float(min(max(jsd, 0.0), math.log(2.0)))


def pairwise_distances(phi: np.ndarray, metric: Callable = topic_distance) -> np.ndarray:
    K = phi.shape[0]
    dist = np.zeros((K, K))
    for i in range(K):
        for j in range(i + 1, K):
            dist[i, j] = dist[j, i] = metric(phi[i], phi[j])
    return dist


def group_topics(phi: np.ndarray, target_groups: int = 5, metric: Callable = topic_distance) -> TopicGrouping:
    """Average-linkage agglomerative clustering of topic rows down to ``target_groups`` cells.

    Among equally distant cluster pairs, the pair whose (smallest member,
    smallest member) is lexicographically first is merged.
    """
    phi = np.asarray(phi, dtype=np.float64)
    K = phi.shape[0]
    if not 1 <= target_groups <= K:
        raise ValueError(f"target_groups must be in 1..{K}")
    dist = pairwise_distances(phi, metric)
    clusters = [[i] for i in range(K)]
    while len(clusters) > target_groups:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = dist[np.ix_(clusters[a], clusters[b])].mean()
                if best is None or d < best[0]:
                    best = (d, a, b)
        _, a, b = best
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
        clusters.sort(key=lambda c: c[0])
    return TopicGrouping(tuple(tuple(c) for c in clusters))


def merge_topics(rows, members: Sequence[int] = ()) -> ClusteredTopic:
    """Average the word probabilities of a group's topic rows."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] == 0:
        raise ValueError("cannot merge an empty group")
    return ClusteredTopic(rows.sum(axis=0) / rows.shape[0], frozenset(members))


def cluster_topics(phi: np.ndarray, target_groups: int = 5, metric: Callable = topic_distance) -> list:
    """Group the topics of ``phi`` and merge every group; ordered by smallest member."""
    grouping = group_topics(phi, target_groups, metric)
    return [merge_topics(phi[list(g)], g) for g in grouping.groups]


def top_words(topic: ClusteredTopic, n: int, vocab) -> list:
    """The ``n`` most probable words of ``topic``, ties broken by lower token id."""
    if n > len(topic.word_probs):
        raise ValueError(f"asked for {n} words from a vocabulary of {len(topic.word_probs)}")
    return vocab.decode(topic.top_ids(n))


def clusters_to_json(clusters: Sequence[ClusteredTopic], vocab, n: int = 10) -> list:
    out = []
    for c in clusters:
        ids = c.top_ids(min(n, len(c.word_probs)))
        out.append({
            "members": sorted(int(m) for m in c.members),
            "top_words": [{"word": vocab.id_to_token[i], "prob": float(c.word_probs[i])} for i in ids],
        })
    return out
