import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collocative.errors import EmptyInput, LengthMismatch, TooFewRecords
from collocative.evaluation import (
    compute_metrics, cross_validate, kfold_indices, stratified_holdout,
)


def confusion(tp, fp, fn, tn):
    preds = [1] * tp + [1] * fp + [0] * fn + [0] * tn
    labels = [1] * tp + [0] * fp + [1] * fn + [0] * tn
    return preds, labels


def test_hand_confusion_matrix():
    m = compute_metrics(*confusion(3, 1, 2, 4))
    assert (m.tp, m.fp, m.fn, m.tn) == (3, 1, 2, 4)
    assert m.accuracy == 70.0
    assert m.tpr == 60.0 and m.tnr == 80.0
    assert m.positive_precision == 75.0 and m.positive_recall == 60.0
    # macro averages over the two classes
    assert m.recall == pytest.approx(70.0)
    assert m.precision == pytest.approx((75.0 + 4 / 6 * 100) / 2)
    assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))


def test_perfect_and_total_miss():
    perfect = compute_metrics([0, 1, 1, 0], [0, 1, 1, 0])
    assert all(getattr(perfect, k) == 100.0 for k in ("accuracy", "f1", "recall", "precision", "tpr", "tnr"))
    miss = compute_metrics([1, 0, 0, 1], [0, 1, 1, 0])
    assert (miss.accuracy, miss.tpr, miss.tnr) == (0.0, 0.0, 0.0)


def test_undefined_ratios_are_zero():
    m = compute_metrics([0, 0], [0, 0])
    assert m.tpr == 0.0 and m.positive_precision == 0.0


def test_errors():
    with pytest.raises(LengthMismatch):
        compute_metrics([1], [1, 0])
    with pytest.raises(EmptyInput):
        compute_metrics([], [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60), st.randoms())
def test_metric_invariants(pairs, rnd):
    preds, labels = map(list, zip(*pairs))
    m = compute_metrics(preds, labels)
    assert m.total == len(pairs)
    assert m.accuracy == pytest.approx(100 * (m.tp + m.tn) / m.total)
    for k in ("accuracy", "f1", "recall", "precision", "tpr", "tnr"):
        assert 0 <= getattr(m, k) <= 100
    rnd.shuffle(pairs)
    p2, l2 = map(list, zip(*pairs))
    assert compute_metrics(p2, l2) == m


def test_ten_folds_over_hundred_records():
    labels = np.arange(100) % 2
    folds = kfold_indices(labels, 10, seed=0)
    assert all(len(f) == 10 for f in folds)
    joined = np.concatenate(folds)
    assert len(set(joined.tolist())) == 100
    for f in folds:
        assert labels[f].sum() == 5
    again = kfold_indices(labels, 10, seed=0)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 200), st.integers(0, 2**31))
def test_folds_partition(k, extra, seed):
    n = k + extra
    labels = np.random.default_rng(seed).integers(0, 2, n)
    folds = kfold_indices(labels, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sorted(np.concatenate(folds).tolist()) == list(range(n))


def test_fold_errors():
    with pytest.raises(TooFewRecords):
        kfold_indices([0, 1, 0], 5, 0)
    with pytest.raises(TooFewRecords):
        kfold_indices([0, 1, 0], 1, 0)


def test_cross_validate_trains_on_complement():
    labels = np.arange(40) % 2
    seen = []

    def fit_predict(train, test, fold):
        assert not set(train) & set(test)
        assert len(train) + len(test) == 40
        seen.append(fold)
        return labels[test]

    cv = cross_validate(labels, 4, 1, fit_predict)
    assert seen == [0, 1, 2, 3]
    assert cv.mean("accuracy") == 100.0 and cv.std("accuracy") == 0.0
    text = cv.to_csv(seed=1)
    rows = text.strip().splitlines()
    assert rows[0].startswith("fold,accuracy,f1,recall,precision,tpr,tnr")
    assert len(rows) == 1 + 4 + 2
    assert rows[-2].startswith("mean,") and rows[-1].startswith("std,")


def test_stratified_holdout():
    labels = np.array([0] * 50 + [1] * 30)
    train, held = stratified_holdout(labels, 0.2, 5)
    assert len(held) == 16 and labels[held].sum() == 6
    assert sorted(np.concatenate([train, held]).tolist()) == list(range(80))
