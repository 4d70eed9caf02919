"""Binary classification metrics and stratified k-fold cross-validation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields

import numpy as np

from .errors import EmptyInput, LengthMismatch, TooFewRecords


def _pct(num, den):
    return 100.0 * num / den if den else 0.0


@dataclass(frozen=True)
class Metrics:
    """Percentages; recall, precision and F1 are macro-averaged over both classes."""

    accuracy: float
    f1: float
    recall: float
    precision: float
    tpr: float
    tnr: float
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def positive_precision(self):
        return _pct(self.tp, self.tp + self.fp)

    @property
    def positive_recall(self):
        return _pct(self.tp, self.tp + self.fn)

    def as_row(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


METRIC_FIELDS = ("accuracy", "f1", "recall", "precision", "tpr", "tnr")


def compute_metrics(predictions, labels, positive_class=1):
    pred = list(predictions)
    true = list(labels)
    if len(pred) != len(true):
        raise LengthMismatch(f"{len(pred)} predictions for {len(true)} labels")
    if not true:
        raise EmptyInput("no predictions to score")
    tp = fp = fn = tn = 0
    for p, t in zip(pred, true):
        if t == positive_class:
            if p == positive_class:
                tp += 1
            else:
                fn += 1
        elif p == positive_class:
            fp += 1
        else:
            tn += 1
    recall = 0.5 * (_pct(tp, tp + fn) + _pct(tn, tn + fp))
    precision = 0.5 * (_pct(tp, tp + fp) + _pct(tn, tn + fn))
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(
        accuracy=_pct(tp + tn, tp + fp + fn + tn),
        f1=f1,
        recall=recall,
        precision=precision,
        tpr=_pct(tp, tp + fn),
        tnr=_pct(tn, tn + fp),
        tp=tp, fp=fp, fn=fn, tn=tn,
    )


def kfold_indices(labels, k, seed):
    """Stratified folds: shuffle each class, then deal round-robin.

    Dealing continues across classes so fold sizes differ by at most one.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise TooFewRecords("k must be at least 2")
    if len(labels) < k:
        raise TooFewRecords(f"{len(labels)} records cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    slot = 0
    for cls in np.unique(labels):
        members = np.nonzero(labels == cls)[0]
        for idx in rng.permutation(members):
            folds[slot % k].append(int(idx))
            slot += 1
    return [np.array(sorted(f), dtype=int) for f in folds]


@dataclass
class CrossValidation:
    folds: list  # Metrics per fold
    test_indices: list
    predictions: np.ndarray

    def mean(self, name):
        return float(np.mean([getattr(m, name) for m in self.folds]))

    def std(self, name):
        return float(np.std([getattr(m, name) for m in self.folds]))

    def to_csv(self, seed=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        head = ["fold", *METRIC_FIELDS, "tp", "fp", "fn", "tn"]
        if seed is not None:
            head.append("seed")
        writer.writerow(head)
        for i, m in enumerate(self.folds):
            row = [i, *(f"{getattr(m, f):.4f}" for f in METRIC_FIELDS), m.tp, m.fp, m.fn, m.tn]
            if seed is not None:
                row.append(seed)
            writer.writerow(row)
        for label, fn in (("mean", self.mean), ("std", self.std)):
            row = [label, *(f"{fn(f):.4f}" for f in METRIC_FIELDS), "", "", "", ""]
            if seed is not None:
                row.append(seed)
            writer.writerow(row)
        return buf.getvalue()


def cross_validate(labels, k, seed, fit_predict, positive_class=1):
    """Run ``fit_predict(train_idx, test_idx, fold) -> test predictions`` per fold."""
    labels = np.asarray(labels)
    folds = kfold_indices(labels, k, seed)
    predictions = np.full(len(labels), -1)
    per_fold = []
    everything = np.arange(len(labels))
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(everything, test_idx)
        pred = np.asarray(fit_predict(train_idx, test_idx, i))
        predictions[test_idx] = pred
        per_fold.append(compute_metrics(pred, labels[test_idx], positive_class))
    return CrossValidation(per_fold, folds, predictions)


def stratified_holdout(labels, fraction, seed):
    """Deterministic ``(train_idx, heldout_idx)`` split keeping class ratios."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    held = []
    for cls in np.unique(labels):
        members = rng.permutation(np.nonzero(labels == cls)[0])
        take = max(1, int(round(fraction * len(members)))) if len(members) > 1 else 0
        held.extend(members[:take].tolist())
    held = np.array(sorted(held), dtype=int)
    train = np.setdiff1d(np.arange(len(labels)), held)
    return train, held
