"""Stratified k-fold evaluation of the baseline: accuracy and support-weighted F1."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .model import Label, ModelAdapter, Observation, TrainConfig, predict_proba, train_baseline


class FoldError(ValueError):
    pass


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int]) -> np.ndarray:
    """2x2 counts, rows = truth (0, 1), columns = prediction (0, 1)."""
    cm = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[int(t), int(p)] += 1
    return cm


def accuracy(y_true, y_pred) -> float:
    cm = confusion_matrix(y_true, y_pred)
    return float(np.trace(cm) / cm.sum())


def weighted_f1(y_true, y_pred) -> float:
    """Sum over classes of (support / N) * F1; a class with no predictions and no support scores 0."""
    cm = confusion_matrix(y_true, y_pred)
    n = cm.sum()
    total = 0.0
    for c in (0, 1):
        tp = cm[c, c]
        fp = cm[:, c].sum() - tp
        fn = cm[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        f1 = 2 * tp / denom if denom else 0.0
        total += cm[c, :].sum() / n * f1
    return float(total)


def stratified_folds(labels: Sequence[int], k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays for ``k`` stratified folds; every fold gets both classes."""
    labels = np.asarray(labels, dtype=int)
    counts = {c: int((labels == c).sum()) for c in (0, 1)}
    if k < 2:
        raise FoldError("need at least 2 folds")
    if min(counts.values()) < k:
        raise FoldError(f"cannot build {k} stratified folds from class counts {counts}")
    rng = np.random.default_rng(seed)
    assign = np.empty(labels.size, dtype=int)
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = np.arange(idx.size) % k
    return [np.flatnonzero(assign == f) for f in range(k)]


@dataclass(frozen=True)
class FoldResult:
    fold: int
    accuracy: float
    weighted_f1: float
    test_size: int


@dataclass(frozen=True)
class EvaluationSummary:
    folds: tuple[FoldResult, ...]
    accuracy_mean: float
    accuracy_sd: float
    weighted_f1_mean: float
    weighted_f1_sd: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["accuracy_display"] = format_pm(self.accuracy_mean, self.accuracy_sd)
        d["weighted_f1_display"] = format_pm(self.weighted_f1_mean, self.weighted_f1_sd)
        return d


def format_pm(mean: float, sd: float) -> str:
    """Percentage with its fold SD, e.g. ``91 ± 2.63``."""
    return f"{100 * mean:.0f} ± {100 * sd:.2f}"


def summarize(folds: Sequence[FoldResult]) -> EvaluationSummary:
    acc = np.array([f.accuracy for f in folds])
    f1 = np.array([f.weighted_f1 for f in folds])
    return EvaluationSummary(tuple(folds), float(acc.mean()), float(acc.std()), float(f1.mean()), float(f1.std()))


Trainer = Callable[[list[tuple[Observation, int]]], ModelAdapter]


def cross_validate(
    pairs: Sequence[tuple[Observation, int]],
    folds: int = 5,
    seed: int = 0,
    trainer: Trainer | None = None,
    on_fold: Callable[[int, ModelAdapter, list[tuple[Observation, int]]], None] | None = None,
) -> EvaluationSummary:
    """Retrain on k-1 folds, score on the held-out fold.

    ``trainer`` defaults to :func:`train_baseline` with default settings.
    ``on_fold`` sees each fold's model and test pairs (used for recovery scoring).
    """
    trainer = trainer or (lambda data: train_baseline(data, TrainConfig()))
    labels = [int(lbl) for _, lbl in pairs]
    results = []
    for f, test_idx in enumerate(stratified_folds(labels, folds, seed)):
        test_set = set(test_idx.tolist())
        train = [pairs[i] for i in range(len(pairs)) if i not in test_set]
        test = [pairs[i] for i in test_idx]
        model = trainer(train)
        y_true = [lbl for _, lbl in test]
        y_pred = [int(predict_proba(model, o).label == Label.POSITIVE) for o, _ in test]
        results.append(FoldResult(f, accuracy(y_true, y_pred), weighted_f1(y_true, y_pred), len(test)))
        if on_fold is not None:
            on_fold(f, model, test)
    return summarize(results)
