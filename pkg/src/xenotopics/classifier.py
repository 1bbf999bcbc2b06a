"""Five-way category classifier: TF-IDF features with a grid-searched multinomial logistic model.

The model is trained by full-batch gradient descent with a fixed step of
1/L, where L bounds the Lipschitz constant of the loss gradient, so the
training loss never increases between epochs.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.special import log_softmax, softmax

from xenotopics.corpus import CategoryLabel
from xenotopics.errors import (
    EmptyInput,
    LengthMismatch,
    MissingClass,
    ParseError,
    TooFewExamples,
)
from xenotopics.textprep import Vocabulary, build_vocabulary, prep_for_classifier

N_CLASSES = len(CategoryLabel)
DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
GRAD_TOL = 1e-5
MAX_EPOCHS = 1000


@dataclass(frozen=True)
class LabeledExample:
    doc_id: str
    text: str
    label: CategoryLabel


@dataclass
class LinearModel:
    weights: np.ndarray            # N_CLASSES x (V + 1); last column is the bias
    vocab: Vocabulary
    idf: np.ndarray
    regularization: float          # inverse penalty strength C
    cv_scores: dict = field(default_factory=dict)
    epochs: int = 0
    converged: bool = False


@dataclass
class EvalReport:
    accuracy: float
    weighted_f1: float
    confusion: np.ndarray          # rows gold, columns predicted
    per_class_f1: np.ndarray

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "per_class_f1": [float(f) for f in self.per_class_f1],
            "confusion": self.confusion.tolist(),
        }


def tokens(text: str) -> list:
    return prep_for_classifier(text).split()


def split_train_test(examples: Sequence, test_fraction: float = 0.1, seed: int = 0):
    """Shuffle with ``seed`` and cut off ``round(test_fraction * N)`` test examples."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n = len(examples)
    n_test = int(math.floor(test_fraction * n + 0.5))
    if n_test == 0 or n_test == n:
        raise TooFewExamples(f"{n} examples cannot be split with test_fraction={test_fraction}")
    order = np.random.default_rng(seed).permutation(n)
    test = [examples[i] for i in order[:n_test]]
    train = [examples[i] for i in order[n_test:]]
    return train, test


def featurize_tfidf(docs: Sequence[Sequence[str]], vocab: Vocabulary, idf: Optional[np.ndarray] = None):
    """TF-IDF rows, L2-normalized.

    tf is count over document length; idf is ``ln((1+N)/(1+df)) + 1`` over
    ``docs`` unless a precomputed ``idf`` is passed. Returns ``(X, idf)``.
    """
    V = len(vocab)
    rows, cols, vals = [], [], []
    for r, doc in enumerate(docs):
        ids = vocab.encode(doc)
        if not ids:
            continue
        counts = np.bincount(ids, minlength=V)
        nz = np.flatnonzero(counts)
        rows.extend([r] * nz.size)
        cols.extend(nz.tolist())
        vals.extend((counts[nz] / len(doc)).tolist())
    tf = sparse.csr_matrix((vals, (rows, cols)), shape=(len(docs), V), dtype=np.float64)
    if idf is None:
        df = np.bincount(tf.indices, minlength=V)
        idf = np.log((1.0 + len(docs)) / (1.0 + df)) + 1.0
    X = tf.multiply(idf[None, :]).tocsr()
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    X = sparse.diags(1.0 / norms) @ X
    return X.tocsr(), idf


def _with_bias(X) -> sparse.csr_matrix:
    return sparse.hstack([X, np.ones((X.shape[0], 1))], format="csr")


def loss_and_grad(W: np.ndarray, Xa, y: np.ndarray, C: float):
    """Mean cross-entropy plus ``||W_features||^2 / (2 C N)`` and its gradient."""
    N = Xa.shape[0]
    logits = np.asarray(Xa @ W.T)
    logp = log_softmax(logits, axis=1)
    loss = -logp[np.arange(N), y].mean()
    P = np.exp(logp)
    P[np.arange(N), y] -= 1.0
    grad = np.asarray((Xa.T @ P).T) / N
    Wf = W[:, :-1]
    loss += (Wf * Wf).sum() / (2.0 * C * N)
    grad[:, :-1] += Wf / (C * N)
    return float(loss), grad


def fit_logistic(X, y: np.ndarray, C: float, max_epochs: int = MAX_EPOCHS, tol: float = GRAD_TOL,
                 history: Optional[list] = None):
    """Full-batch gradient descent; returns ``(W, epochs, converged)``."""
    Xa = _with_bias(X)
    N = Xa.shape[0]
    # softmax curvature <= 1/2 and ||Xa||_2^2 <= ||Xa||_F^2
    lipschitz = 0.5 * Xa.multiply(Xa).sum() / N + 1.0 / (C * N)
    step = 1.0 / lipschitz
    W = np.zeros((N_CLASSES, Xa.shape[1]))
    converged = False
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        loss, grad = loss_and_grad(W, Xa, y, C)
        if history is not None:
            history.append(loss)
        if np.abs(grad).max() < tol:
            converged = True
            epoch -= 1
            break
        W -= step * grad
    return W, epoch, converged


def _labels(examples) -> np.ndarray:
    return np.array([int(e.label) for e in examples], dtype=np.int64)


def _fit_examples(examples, C: float) -> LinearModel:
    docs = [tokens(e.text) for e in examples]
    vocab, _ = build_vocabulary(docs, min_df=1)
    X, idf = featurize_tfidf(docs, vocab)
    W, epochs, converged = fit_logistic(X, _labels(examples), C)
    return LinearModel(W, vocab, idf, C, epochs=epochs, converged=converged)


def kfold_indices(n: int, folds: int, seed: int) -> list:
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(order, folds)]


def cross_validate(examples, C: float, folds: int = 5, seed: int = 0) -> float:
    """Mean weighted F1 over ``folds`` seeded folds."""
    parts = kfold_indices(len(examples), folds, seed)
    scores = []
    for k, held in enumerate(parts):
        held_set = set(held.tolist())
        fit = [examples[i] for i in range(len(examples)) if i not in held_set]
        model = _fit_examples(fit, C)
        preds = [predict(model, examples[i].text)[0] for i in held]
        gold = [examples[i].label for i in held]
        scores.append(evaluate(preds, gold).weighted_f1)
    return float(np.mean(scores))


def train_linear(train, grid: Sequence[float] = DEFAULT_GRID, folds: int = 5, seed: int = 0) -> LinearModel:
    """Pick C by cross-validated weighted F1 (ties to the smaller C), then fit on all of ``train``."""
    if not grid:
        raise ValueError("grid must be nonempty")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    missing = set(range(N_CLASSES)) - {int(e.label) for e in train}
    if missing:
        raise MissingClass(f"classes absent from training data: {sorted(missing)}")
    cv_scores = {}
    if len(grid) == 1:
        best = grid[0]
    else:
        if len(train) < folds:
            raise TooFewExamples(f"{len(train)} examples for {folds}-fold cross-validation")
        for C in grid:
            cv_scores[C] = cross_validate(train, C, folds, seed)
        best = min(grid, key=lambda c: (-cv_scores[c], c))
    model = _fit_examples(train, best)
    model.cv_scores = cv_scores
    return model


def predict_scores(model: LinearModel, texts: Sequence[str]) -> np.ndarray:
    X, _ = featurize_tfidf([tokens(t) for t in texts], model.vocab, model.idf)
    return softmax(np.asarray(_with_bias(X) @ model.weights.T), axis=1)


def predict(model: LinearModel, text: str):
    """Return ``(label, scores)``; argmax ties go to the lowest class code."""
    scores = predict_scores(model, [text])[0]
    return CategoryLabel(int(np.argmax(scores))), scores


def predict_many(model: LinearModel, texts: Sequence[str]) -> list:
    scores = predict_scores(model, texts)
    return [CategoryLabel(int(i)) for i in np.argmax(scores, axis=1)]


def confusion_matrix(predictions, gold) -> np.ndarray:
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for p, g in zip(predictions, gold):
        cm[int(g), int(p)] += 1
    return cm


def evaluate(predictions, gold) -> EvalReport:
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise EmptyInput("nothing to evaluate")
    cm = confusion_matrix(predictions, gold)
    tp = np.diag(cm).astype(np.float64)
    pred_totals = cm.sum(axis=0)
    support = cm.sum(axis=1)
    precision = np.divide(tp, pred_totals, out=np.zeros(N_CLASSES), where=pred_totals > 0)
    recall = np.divide(tp, support, out=np.zeros(N_CLASSES), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(N_CLASSES), where=denom > 0)
    n = cm.sum()
    return EvalReport(float(tp.sum() / n), float((support / n) @ f1), cm, f1)


def import_external_predictions(path) -> dict:
    """Read an ``id,label`` CSV of labels produced by an outside classifier."""
    result = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if rowno == 1 and [c.strip().lower() for c in row] == ["id", "label"]:
                continue
            if len(row) != 2 or not row[0].strip():
                raise ParseError("expected 'id,label'", row=rowno)
            doc_id = row[0].strip()
            label = CategoryLabel.parse(row[1].strip())   # UnknownLabel propagates
            if doc_id in result and result[doc_id] != label:
                raise ParseError(f"conflicting labels for id {doc_id!r}", row=rowno)
            result[doc_id] = label
    return result


def write_predictions(predictions: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for doc_id, label in predictions.items():
            writer.writerow([doc_id, int(label)])


def write_eval_report(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def token_length_stats(texts: Sequence[str]):
    """(min, max, lower median, mean) of token counts after classifier cleaning."""
    if not texts:
        raise EmptyInput("no texts")
    lengths = [len(tokens(t)) for t in texts]
    return min(lengths), max(lengths), statistics.median_low(lengths), statistics.fmean(lengths)


def model_to_dict(model: LinearModel) -> dict:
    return {
        "weights": model.weights.tolist(),
        "vocab": model.vocab.to_list(),
        "idf": model.idf.tolist(),
        "regularization": model.regularization,
        "cv_scores": {str(k): v for k, v in model.cv_scores.items()},
        "epochs": model.epochs,
        "converged": model.converged,
    }


def model_from_dict(data: dict) -> LinearModel:
    return LinearModel(
        np.asarray(data["weights"]), Vocabulary(data["vocab"]), np.asarray(data["idf"]),
        float(data["regularization"]), {float(k): v for k, v in data["cv_scores"].items()},
        int(data["epochs"]), bool(data["converged"]),
    )
