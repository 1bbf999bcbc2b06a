"""Latent Dirichlet allocation by collapsed Gibbs sampling.

The sampler keeps the usual count tables (document-topic, topic-word and
topic totals) next to the flat token/assignment arrays. Every sweep draws one
uniform per token from a seeded numpy generator and hands them to a compiled
kernel, so a run is bitwise reproducible from its seed.

The document-topic prior alpha is asymmetric and re-estimated on a schedule
with Minka's fixed-point update; beta stays fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numba
import numpy as np
from scipy.special import digamma, gammaln

from xenotopics.errors import EmptyCorpus

ALPHA_FLOOR = 1e-6
ALPHA_MAX_ITER = 50
ALPHA_TOL = 1e-6


@dataclass
class TopicModelParams:
    """Hyperparameters and schedule of one sampler run.

    ``alpha`` and ``beta`` default to ``1/K``. Alpha is re-estimated after
    sweep ``t`` whenever ``t > burn_in`` and ``(t - burn_in) % optimize_interval == 0``;
    an interval of 0 turns re-estimation off.
    """

    K: int
    alpha: Optional[Sequence[float]] = None
    beta: Optional[float] = None
    iterations: int = 1000
    burn_in: int = 100
    optimize_interval: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.alpha is None:
            self.alpha = np.full(self.K, 1.0 / self.K)
        else:
            self.alpha = np.asarray(self.alpha, dtype=np.float64).copy()
            if self.alpha.ndim == 0:
                self.alpha = np.full(self.K, float(self.alpha))
        if self.alpha.shape != (self.K,) or np.any(self.alpha <= 0):
            raise ValueError("alpha must be K positive reals")
        if self.beta is None:
            self.beta = 1.0 / self.K
        self.beta = float(self.beta)
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.iterations < 0 or self.burn_in < 0 or self.optimize_interval < 0:
            raise ValueError("iterations, burn_in and optimize_interval must be non-negative")

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "alpha": [float(a) for a in self.alpha],
            "beta": self.beta,
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "optimize_interval": self.optimize_interval,
            "seed": self.seed,
        }


def optimization_due(sweep: int, burn_in: int, interval: int) -> bool:
    return interval > 0 and sweep > burn_in and (sweep - burn_in) % interval == 0


def optimization_sweeps(iterations: int, burn_in: int, interval: int) -> list:
    """Sweep numbers (1-based) after which alpha is re-estimated."""
    return [t for t in range(1, iterations + 1) if optimization_due(t, burn_in, interval)]


@dataclass
class TopicModelState:
    words: np.ndarray          # flat token ids, int32
    doc_starts: np.ndarray     # D+1 offsets into words
    z: np.ndarray              # flat topic assignments, int32
    n_dk: np.ndarray
    n_kw: np.ndarray
    n_k: np.ndarray
    alpha: np.ndarray
    beta: float
    vocab_size: int
    params: TopicModelParams
    rng: np.random.Generator
    sweeps_done: int = 0
    optimize_events: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.n_k.shape[0]

    @property
    def num_docs(self) -> int:
        return self.doc_starts.shape[0] - 1

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.doc_starts)

    def doc_assignments(self) -> list:
        """Topic assignments split per document."""
        return [self.z[a:b].copy() for a, b in zip(self.doc_starts[:-1], self.doc_starts[1:])]

    def doc_words(self) -> list:
        return [self.words[a:b].copy() for a, b in zip(self.doc_starts[:-1], self.doc_starts[1:])]

    def doc_of_token(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_docs, dtype=np.int32), self.doc_lengths)

    def check_counts(self) -> None:
        """Raise AssertionError if the count tables disagree with ``z``."""
        n_dk, n_kw, n_k = _counts_from_assignments(self.words, self.doc_of_token(), self.z,
                                                   self.num_docs, self.K, self.vocab_size)
        assert np.array_equal(n_dk, self.n_dk), "n_dk inconsistent with z"
        assert np.array_equal(n_kw, self.n_kw), "n_kw inconsistent with z"
        assert np.array_equal(n_k, self.n_k), "n_k inconsistent with z"
        assert np.array_equal(self.n_dk.sum(axis=1), self.doc_lengths)
        assert np.array_equal(self.n_kw.sum(axis=1), self.n_k)
        assert int(self.n_k.sum()) == self.words.shape[0]

    def copy(self) -> "TopicModelState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return TopicModelState(
            self.words.copy(), self.doc_starts.copy(), self.z.copy(), self.n_dk.copy(),
            self.n_kw.copy(), self.n_k.copy(), self.alpha.copy(), self.beta, self.vocab_size,
            self.params, rng, self.sweeps_done, list(self.optimize_events),
        )


def _doc_token_ids(doc) -> Sequence[int]:
    return doc.tokens if hasattr(doc, "tokens") else doc


def _flatten(docs, vocab_size: Optional[int]):
    seqs = [np.asarray(_doc_token_ids(d), dtype=np.int64) for d in docs]
    lengths = np.array([s.shape[0] for s in seqs], dtype=np.int64)
    starts = np.zeros(len(seqs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=starts[1:])
    words = np.concatenate(seqs) if seqs else np.zeros(0, dtype=np.int64)
    if words.size and words.min() < 0:
        raise ValueError("token ids must be non-negative")
    if vocab_size is None:
        vocab_size = int(words.max()) + 1 if words.size else 1
    elif words.size and words.max() >= vocab_size:
        raise ValueError(f"token id {int(words.max())} >= vocab_size {vocab_size}")
    return words.astype(np.int32), starts, vocab_size


def _counts_from_assignments(words, doc_of, z, D, K, V):
    n_dk = np.zeros((D, K), dtype=np.int64)
    n_kw = np.zeros((K, V), dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, words), 1)
    return n_dk, n_kw, n_kw.sum(axis=1)


def from_assignments(docs, z, params: TopicModelParams, vocab_size: Optional[int] = None,
                     rng: Optional[np.random.Generator] = None) -> TopicModelState:
    """Build a state with given per-document topic assignments."""
    if len(docs) == 0:
        raise EmptyCorpus("no documents")
    words, starts, V = _flatten(docs, vocab_size)
    flat_z = np.concatenate([np.asarray(zd, dtype=np.int32) for zd in z]) if len(z) else np.zeros(0, np.int32)
    if flat_z.shape != words.shape:
        raise ValueError("assignments do not match document lengths")
    if flat_z.size and (flat_z.min() < 0 or flat_z.max() >= params.K):
        raise ValueError("assignment outside 0..K-1")
    D = starts.shape[0] - 1
    doc_of = np.repeat(np.arange(D, dtype=np.int32), np.diff(starts))
    n_dk, n_kw, n_k = _counts_from_assignments(words, doc_of, flat_z, D, params.K, V)
    return TopicModelState(
        words, starts, flat_z.astype(np.int32), n_dk, n_kw, n_k,
        np.asarray(params.alpha, dtype=np.float64).copy(), params.beta, V, params,
        rng if rng is not None else np.random.default_rng(params.seed),
    )


def init_state(docs, params: TopicModelParams, vocab_size: Optional[int] = None) -> TopicModelState:
    """Assign every token a uniformly random topic drawn from the seeded generator."""
    if len(docs) == 0:
        raise EmptyCorpus("no documents")
    words, starts, V = _flatten(docs, vocab_size)
    rng = np.random.default_rng(params.seed)
    flat_z = rng.integers(0, params.K, size=words.shape[0]).astype(np.int32)
    z = [flat_z[a:b] for a, b in zip(starts[:-1], starts[1:])]
    return from_assignments(docs, z, params, V, rng=rng)


@numba.njit(cache=True)
def _resample(start, stop, words, doc_of, z, n_dk, n_kw, n_k, alpha, beta, vbeta, uniforms):
    K = n_k.shape[0]
    cum = np.empty(K)
    for i in range(start, stop):
        w = words[i]
        d = doc_of[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1
        total = 0.0
        for t in range(K):
            total += (n_dk[d, t] + alpha[t]) * (n_kw[t, w] + beta) / (n_k[t] + vbeta)
            cum[t] = total
        u = uniforms[i - start] * total
        new = K - 1
        for t in range(K):
            if u < cum[t]:
                new = t
                break
        z[i] = new
        n_dk[d, new] += 1
        n_kw[new, w] += 1
        n_k[new] += 1


def conditional_weights(state: TopicModelState, i: int) -> np.ndarray:
    """Unnormalized full conditional of token ``i`` with its own assignment removed."""
    w = state.words[i]
    d = int(np.searchsorted(state.doc_starts, i, side="right") - 1)
    own = np.zeros(state.K, dtype=np.int64)
    own[state.z[i]] = 1
    return ((state.n_dk[d] - own + state.alpha) * (state.n_kw[:, w] - own + state.beta)
            / (state.n_k - own + state.vocab_size * state.beta))


def resample_tokens(state: TopicModelState, start: int, stop: int, uniforms: np.ndarray) -> None:
    """Resample tokens ``start..stop-1`` in place with caller-supplied uniforms."""
    _resample(start, stop, state.words, state.doc_of_token(), state.z, state.n_dk, state.n_kw,
              state.n_k, state.alpha, state.beta, state.vocab_size * state.beta,
              np.asarray(uniforms, dtype=np.float64))


def gibbs_sweep(state: TopicModelState, doc_of: Optional[np.ndarray] = None) -> TopicModelState:
    """One pass over every token, updating ``state`` in place (and returning it)."""
    n = state.words.shape[0]
    uniforms = state.rng.random(n)
    if doc_of is None:
        doc_of = state.doc_of_token()
    _resample(0, n, state.words, doc_of, state.z, state.n_dk, state.n_kw, state.n_k,
              state.alpha, state.beta, state.vocab_size * state.beta, uniforms)
    state.sweeps_done += 1
    return state


def minka_alpha(n_dk: np.ndarray, alpha: np.ndarray, max_iter: int = ALPHA_MAX_ITER,
                tol: float = ALPHA_TOL, floor: float = ALPHA_FLOOR) -> np.ndarray:
    """Fixed-point maximum-likelihood update of a Dirichlet-multinomial prior.

    ``n_dk`` holds the per-document topic counts; returns the new alpha.
    """
    alpha = np.asarray(alpha, dtype=np.float64).copy()
    n_dk = np.asarray(n_dk, dtype=np.float64)
    n_d = n_dk.sum(axis=1)
    n_dk, n_d = n_dk[n_d > 0], n_d[n_d > 0]  # empty docs add zero to both sums
    if n_d.size == 0:
        return alpha
    D = n_d.shape[0]
    for _ in range(max_iter):
        total = alpha.sum()
        denom = digamma(n_d + total).sum() - D * digamma(total)
        numer = digamma(n_dk + alpha).sum(axis=0) - D * digamma(alpha)
        new = np.maximum(alpha * numer / denom, floor)
        delta = np.max(np.abs(new - alpha))
        alpha = new
        if delta < tol:
            break
    return alpha


def optimize_alpha(state: TopicModelState) -> TopicModelState:
    state.alpha = minka_alpha(state.n_dk, state.alpha)
    return state


def train(docs, params: TopicModelParams, vocab_size: Optional[int] = None,
          callback: Optional[Callable[[TopicModelState], None]] = None) -> TopicModelState:
    """Initialize and run ``params.iterations`` sweeps with scheduled alpha updates.

    ``callback`` (if given) sees the state after every sweep and alpha update.
    """
    state = init_state(docs, params, vocab_size)
    doc_of = state.doc_of_token()
    for t in range(1, params.iterations + 1):
        gibbs_sweep(state, doc_of)
        if optimization_due(t, params.burn_in, params.optimize_interval):
            optimize_alpha(state)
            state.optimize_events.append(t)
        if callback is not None:
            callback(state)
    return state


def phi(state: TopicModelState) -> np.ndarray:
    """Topic-word distributions, K x V."""
    V = state.vocab_size
    return (state.n_kw + state.beta) / (state.n_k[:, None] + V * state.beta)


def theta(state: TopicModelState) -> np.ndarray:
    """Document-topic distributions, D x K."""
    n_d = state.doc_lengths.astype(np.float64)
    return (state.n_dk + state.alpha) / (n_d[:, None] + state.alpha.sum())


def log_likelihood(state: TopicModelState) -> float:
    """Joint log p(w, z | alpha, beta) with phi and theta integrated out."""
    V, beta, alpha = state.vocab_size, state.beta, state.alpha
    word_part = (state.K * (gammaln(V * beta) - V * gammaln(beta))
                 + gammaln(state.n_kw + beta).sum()
                 - gammaln(state.n_k + V * beta).sum())
    n_d = state.doc_lengths
    doc_part = (state.num_docs * (gammaln(alpha.sum()) - gammaln(alpha).sum())
                + gammaln(state.n_dk + alpha).sum()
                - gammaln(n_d + alpha.sum()).sum())
    return float(word_part + doc_part)


def top_word_ids(dist: np.ndarray, n: int) -> np.ndarray:
    """Indices of the ``n`` largest entries per row; ties go to the lower index."""
    dist = np.atleast_2d(dist)
    order = np.argsort(-dist, axis=1, kind="stable")
    return order[:, :n]


# ---------------------------------------------------------------------------
# checkpoints


def state_to_dict(state: TopicModelState) -> dict:
    return {
        "params": state.params.to_dict(),
        "alpha": [float(a) for a in state.alpha],
        "beta": state.beta,
        "vocab_size": state.vocab_size,
        "sweeps_done": state.sweeps_done,
        "optimize_events": list(state.optimize_events),
        "docs": [d.tolist() for d in state.doc_words()],
        "z": [zd.tolist() for zd in state.doc_assignments()],
        "n_k": state.n_k.tolist(),
        "rng_state": state.rng.bit_generator.state,
    }


def state_from_dict(data: dict) -> TopicModelState:
    params = TopicModelParams(**data["params"])
    rng = np.random.default_rng()
    rng.bit_generator.state = data["rng_state"]
    state = from_assignments(data["docs"], data["z"], params, data["vocab_size"], rng=rng)
    state.alpha = np.asarray(data["alpha"], dtype=np.float64)
    state.beta = float(data["beta"])
    state.sweeps_done = int(data["sweeps_done"])
    state.optimize_events = list(data["optimize_events"])
    if state.n_k.tolist() != data["n_k"]:
        raise ValueError("checkpoint counts do not match its assignments")
    return state


def save_state(state: TopicModelState, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)), encoding="utf-8")


def load_state(path) -> TopicModelState:
    return state_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
