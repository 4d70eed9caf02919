"""Decode segment-pair saliency into wave-genre ratings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RecordMismatch, ShapeMismatch
from .signal import GENRES


@dataclass
class MembershipMatrix:
    values: np.ndarray  # (segments, genres), 0/1
    genres: tuple

    @property
    def n_segments(self):
        return self.values.shape[0]


@dataclass
class WaveRatingVector:
    values: np.ndarray
    genres: tuple


@dataclass
class WavePairMatrix:
    values: np.ndarray
    genres: tuple


def membership_matrix(annotation, series, genres=GENRES, min_overlap=0.5):
    """``M[i, p] = 1`` when some instance of genre ``p`` covers at least
    ``min_overlap`` of segment ``i``."""
    if annotation.record_id is not None and annotation.record_id != series.record_id:
        raise RecordMismatch(
            f"annotation of {annotation.record_id!r} used with segments of {series.record_id!r}"
        )
    spans = series.spans()
    need = min_overlap * series.segment_length
    m = np.zeros((series.n, len(genres)), dtype=np.int8)
    for p, genre in enumerate(genres):
        for on, off in annotation.instances(genre):
            overlap = np.minimum(spans[:, 1], off) - np.maximum(spans[:, 0], on)
            m[overlap >= need, p] = 1
    return MembershipMatrix(m, tuple(genres))


def _values(saliency):
    return np.asarray(getattr(saliency, "values", saliency), dtype=np.float64)


def unary_rating(saliency, membership):
    """Every pair weight is voted to the genres of both its segments.

    The all-ones normaliser is taken as ``|S|``, so a segment's vote is the
    mean of its row and column sums.
    """
    s = _values(saliency)
    m = membership.values.astype(np.float64)
    n = m.shape[0]
    if s.shape != (n, n):
        raise ShapeMismatch(f"saliency {s.shape} does not match {n} segments")
    votes = (s.sum(axis=1) + s.sum(axis=0)) / (2.0 * n)
    return WaveRatingVector(m.T @ votes / n, membership.genres)


def pairwise_rating(saliency, membership):
    """``W[p, q]`` = total saliency of pairs with ``s_i in w_p`` and ``s_j in w_q``."""
    s = _values(saliency)
    m = membership.values.astype(np.float64)
    n = m.shape[0]
    if s.shape != (n, n):
        raise ShapeMismatch(f"saliency {s.shape} does not match {n} segments")
    return WavePairMatrix(m.T @ s @ m, membership.genres)
