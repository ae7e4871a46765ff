"""Cross-validation accuracy of an SVM at fixed hyperparameters, memoized.

The cache is keyed on the exact (C, gamma) float pair, so only bitwise
repeats (in practice: the incumbent center reappearing in every grid) are
served without retraining.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, FoldAssignment
from .errors import DataError
from .svm import HyperParams, SolverConfig, decision_values, train

__all__ = ["Evaluation", "EvalCache", "accuracy", "cv_accuracy"]


@dataclass(frozen=True)
class Evaluation:
    """Result of one k-fold CV run: the objective value for a (C, gamma)."""

    params: HyperParams
    cv_accuracy: float
    fold_accuracies: tuple[float, ...]


@dataclass
class EvalCache:
    """Thread-safe memo of evaluations keyed by exact parameter values.

    For the positive finite floats used here, dict equality coincides with
    bit-pattern identity, which is the intended lookup rule. ``misses``
    counts evaluations that had to be computed.
    """

    entries: dict[tuple[float, float], Evaluation] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def get(self, params: HyperParams) -> Evaluation | None:
        found = self.entries.get((params.c, params.gamma))
        with self._lock:
            if found is None:
                self.misses += 1
            else:
                self.hits += 1
        return found

    def put(self, params: HyperParams, evaluation: Evaluation) -> None:
        self.entries[(params.c, params.gamma)] = evaluation


def accuracy(predicted, actual) -> float:
    """Fraction of positions where predicted equals actual."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValueError(
            f"length mismatch: {predicted.shape} vs {actual.shape}"
        )
    if predicted.size == 0:
        raise ValueError("cannot score empty label lists")
    return float(np.mean(predicted == actual))


def cv_accuracy(
    d: Dataset,
    folds: FoldAssignment,
    params: HyperParams,
    cfg: SolverConfig = SolverConfig(),
    cache: EvalCache | None = None,
) -> Evaluation:
    """Mean held-out accuracy over the k folds of ``folds``.

    For each fold an SVM is trained on the remaining samples and scored on
    the held-out ones; the objective is the unweighted mean of the k fold
    accuracies. A cache hit returns the stored evaluation without training.
    """
    if folds.n_samples != d.n_samples:
        raise DataError(
            f"fold assignment covers {folds.n_samples} samples, "
            f"dataset has {d.n_samples}"
        )
    if cache is not None:
        cached = cache.get(params)
        if cached is not None:
            return cached

    fold_accuracies = []
    for fold in range(folds.k):
        train_idx = folds.train_indices(fold)
        test_idx = folds.test_indices(fold)
        train_labels = d.labels[train_idx]
        if np.all(train_labels == train_labels[0]):
            raise DataError(
                f"training split for fold {fold} has only one class; "
                "choose a different k or seed"
            )
        model = train(Dataset(d.features[train_idx], train_labels), params, cfg)
        values = decision_values(model, d.features[test_idx])
        predictions = np.where(values >= 0.0, 1, -1)
        fold_accuracies.append(accuracy(predictions, d.labels[test_idx]))

    evaluation = Evaluation(
        params=params,
        cv_accuracy=float(np.mean(fold_accuracies)),
        fold_accuracies=tuple(fold_accuracies),
    )
    if cache is not None:
        cache.put(params, evaluation)
    return evaluation
