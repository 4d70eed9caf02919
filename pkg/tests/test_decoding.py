import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collocative.decoding import MembershipMatrix, membership_matrix, pairwise_rating, unary_rating
from collocative.errors import RecordMismatch, ShapeMismatch
from collocative.signal import GENRES, SegmentSeries, WaveAnnotation, segment


def naive_unary(s, m):
    n, k = m.shape
    out = np.zeros(k)
    for i in range(n):
        for j in range(n):
            for p in range(k):
                # every pair votes half its weight to the genres of each end
                if m[i, p]:
                    out[p] += s[i, j] / (2 * n * n)
                if m[j, p]:
                    out[p] += s[i, j] / (2 * n * n)
    return out


def naive_pairs(s, m):
    n, k = m.shape
    out = np.zeros((k, k))
    for p in range(k):
        for q in range(k):
            for i in range(n):
                for j in range(n):
                    if m[i, p] and m[j, q]:
                        out[p, q] += s[i, j]
    return out


def random_instance(rng, n, k):
    s = rng.random((n, n))
    m = (rng.random((n, k)) < 0.3).astype(np.int8)
    return s, MembershipMatrix(m, tuple(f"g{p}" for p in range(k)))


def test_membership_hand_example():
    series = SegmentSeries("r", np.zeros((6, 10)))
    ann = WaveAnnotation([{"P": (0, 20), "PQ": (20, 40), "Q": (40, 60)}], "r")
    m = membership_matrix(ann, series, genres=("P", "PQ", "Q")).values
    ref = np.repeat(np.eye(3, dtype=np.int8), 2, axis=0)
    np.testing.assert_array_equal(m, ref)


def test_membership_overlap_rule():
    series = SegmentSeries("r", np.zeros((4, 10)))
    # covers 5/10 of segment 0, 4/10 of segment 2, none of segment 3
    ann = WaveAnnotation([{"ST": (5, 24)}], "r")
    m = membership_matrix(ann, series, genres=("ST", "TP")).values
    np.testing.assert_array_equal(m, [[1, 0], [1, 0], [0, 0], [0, 0]])
    assert m.dtype == np.int8


def test_membership_record_mismatch():
    with pytest.raises(RecordMismatch):
        membership_matrix(WaveAnnotation([], "a"), SegmentSeries("b", np.zeros((2, 2))))


def test_membership_on_synthetic_record(clean_record):
    series = segment(clean_record, 64)
    m = membership_matrix(clean_record.annotation, series)
    assert m.values.shape == (64, 15)
    assert set(np.unique(m.values)) <= {0, 1}


def test_uniform_saliency_gives_membership_fraction(rng):
    _, m = random_instance(rng, 10, 4)
    u = unary_rating(np.ones((10, 10)), m).values
    np.testing.assert_array_equal(u, m.values.sum(axis=0) / 10)


def test_small_random_against_double_loop(rng):
    s, m = random_instance(rng, 4, 2)
    np.testing.assert_allclose(unary_rating(s, m).values, naive_unary(s, m.values), atol=1e-12)
    s, m = random_instance(rng, 5, 3)
    np.testing.assert_allclose(pairwise_rating(s, m).values, naive_pairs(s, m.values), atol=1e-12)


def test_single_cell_pairs_and_zero_map():
    m = MembershipMatrix(np.array([[1, 0], [0, 1], [0, 0]], dtype=np.int8), ("p", "q"))
    s = np.arange(9.0).reshape(3, 3)
    assert pairwise_rating(s, m).values[0, 1] == s[0, 1]
    assert np.all(pairwise_rating(np.zeros((3, 3)), m).values == 0)
    assert unary_rating(s, MembershipMatrix(np.zeros((3, 2), np.int8), ("p", "q"))).values.tolist() == [0, 0]


def test_shape_checks(rng):
    _, m = random_instance(rng, 4, 2)
    with pytest.raises(ShapeMismatch):
        unary_rating(np.ones((5, 5)), m)
    with pytest.raises(ShapeMismatch):
        pairwise_rating(np.ones((3, 3)), m)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 12))
def test_mass_conservation_and_linearity(seed, n):
    rng = np.random.default_rng(seed)
    k = 4
    m = np.zeros((n, k), dtype=np.int8)
    m[np.arange(n), rng.integers(0, k, n)] = 1
    mem = MembershipMatrix(m, tuple("abcd"))
    s1, s2 = rng.random((n, n)), rng.random((n, n))
    assert pairwise_rating(s1, mem).values.sum() == pytest.approx(s1.sum())
    lhs = unary_rating(2 * s1 - 3 * s2, mem).values
    rhs = 2 * unary_rating(s1, mem).values - 3 * unary_rating(s2, mem).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
