"""Pairwise relation matrices between segments and multi-view collocative tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    EmptyViewList,
    InvalidParams,
    LengthMismatch,
    MissingCovariance,
    ShapeMismatch,
)
from .signal import FEATURE_KINDS, extract_feature, segment_features

METRICS = ("euclidean", "manhattan", "cosine", "mahalanobis", "max", "avg", "min")
SYMMETRIC_METRICS = METRICS


@dataclass(frozen=True)
class ViewSpec:
    metric: str
    feature: str = "mean"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InvalidParams(f"unknown metric {self.metric!r}")
        if self.feature not in FEATURE_KINDS:
            raise InvalidParams(f"unknown feature {self.feature!r}")

    @property
    def name(self):
        return f"{self.metric}:{self.feature}"

    @classmethod
    def parse(cls, text):
        metric, _, feature = text.strip().partition(":")
        return cls(metric, feature or "mean")


# the seven single views combined into the multi-view tensor
MULTI_VIEW = tuple(ViewSpec(m) for m in METRICS)


@dataclass
class RelationMatrix:
    values: np.ndarray
    view: ViewSpec

    @property
    def n(self):
        return self.values.shape[0]


@dataclass
class CollocativeTensor:
    channels: list

    @property
    def n(self):
        return self.channels[0].n

    @property
    def m(self):
        return len(self.channels)

    @property
    def views(self):
        return tuple(c.view for c in self.channels)

    def array(self, dtype=np.float64):
        """Stack channels last, shape ``(n, n, m)``."""
        return np.stack([c.values for c in self.channels], axis=-1).astype(dtype, copy=False)

    def split(self):
        return list(self.channels)


def regularized_inverse_covariance(segments):
    """Inverse of ``cov + eps I`` with ``eps = 1e-3 * trace(cov) / dim``.

    ``segments`` is any ``(count, dim)`` stack of windows, typically every
    training-set segment.
    """
    x = np.asarray(segments, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeMismatch("need a (count >= 2, dim) array of segments")
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    dim = cov.shape[0]
    eps = 1e-3 * np.trace(cov) / dim
    if eps <= 0:
        eps = 1e-12
    return np.linalg.inv(cov + eps * np.eye(dim))


def metric_eval(a, b, view, cov_inv=None):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"windows of length {a.size} and {b.size}")
    if (view.metric == "mahalanobis") != (cov_inv is not None):
        raise MissingCovariance("cov_inv is required exactly for the mahalanobis metric")
    m = view.metric
    if m == "euclidean":
        return float(np.sqrt(np.sum((a - b) ** 2)))
    if m == "manhattan":
        return float(np.sum(np.abs(a - b)))
    if m == "cosine":
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0 or nb == 0:
            return 0.0
        return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
    if m == "mahalanobis":
        d = a - b
        return float(np.sqrt(max(d @ cov_inv @ d, 0.0)))
    fa, fb = extract_feature(a, view.feature), extract_feature(b, view.feature)
    if m == "max":
        return max(fa, fb)
    if m == "min":
        return min(fa, fb)
    return 0.5 * (fa + fb)


def _pairwise(s, view, cov_inv):
    m = view.metric
    if m == "euclidean":
        return cdist(s, s, "euclidean")
    if m == "manhattan":
        return cdist(s, s, "cityblock")
    if m == "cosine":
        norms = np.linalg.norm(s, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        u = s / safe[:, None]
        sim = np.clip(u @ u.T, -1.0, 1.0)
        sim[norms == 0, :] = 0.0
        sim[:, norms == 0] = 0.0
        # the product is symmetric only up to rounding; mirror the upper triangle
        iu = np.triu_indices(len(s), 1)
        sim.T[iu] = sim[iu]
        return sim
    if m == "mahalanobis":
        return cdist(s, s, "mahalanobis", VI=cov_inv)
    raise AssertionError(m)


def relation_matrix(series, view, cov_inv=None):
    """Pairwise metric off the diagonal, unary feature ``f(s_i)`` on it."""
    if (view.metric == "mahalanobis") != (cov_inv is not None):
        raise MissingCovariance("cov_inv is required exactly for the mahalanobis metric")
    s = series.segments
    if cov_inv is not None and np.shape(cov_inv) != (s.shape[1], s.shape[1]):
        raise ShapeMismatch("covariance dimension differs from the segment length")
    x = segment_features(series, view.feature)
    if view.metric in ("max", "avg", "min"):
        if view.metric == "max":
            values = np.maximum.outer(x, x)
        elif view.metric == "min":
            values = np.minimum.outer(x, x)
        else:
            values = 0.5 * np.add.outer(x, x)
    else:
        values = _pairwise(s, view, cov_inv)
    values = np.array(values, dtype=np.float64)
    np.fill_diagonal(values, x)
    return RelationMatrix(values, view)


def compose_tensor(matrices):
    matrices = list(matrices)
    if not matrices:
        raise EmptyViewList("at least one view is required")
    n = matrices[0].values.shape
    for mat in matrices:
        if mat.values.shape != n or n[0] != n[1]:
            raise ShapeMismatch("all relation matrices must share one square shape")
    return CollocativeTensor(matrices)


def build_tensor(series, views, cov_inv=None):
    """Relation matrix for each view, concatenated in order."""
    return compose_tensor(
        relation_matrix(series, v, cov_inv if v.metric == "mahalanobis" else None)
        for v in views
    )


class ChannelScaler:
    """Per-channel min-max scaling fitted on training tensors."""

    def __init__(self, lo=None, hi=None):
        self.lo = None if lo is None else np.asarray(lo, dtype=np.float64)
        self.hi = None if hi is None else np.asarray(hi, dtype=np.float64)

    def fit(self, arrays):
        stacked = np.asarray(arrays)
        axes = tuple(range(stacked.ndim - 1))
        self.lo = stacked.min(axis=axes).astype(np.float64)
        self.hi = stacked.max(axis=axes).astype(np.float64)
        return self

    def transform(self, arrays):
        span = self.hi - self.lo
        span = np.where(span > 0, span, 1.0)
        return (np.asarray(arrays) - self.lo) / span


class CellStandardizer:
    """Per-cell z-scoring of (already min-max scaled) training tensors.

    Collocative tensors carry a large common component shared by every record;
    removing the per-cell training mean exposes the record-specific part.
    """

    def __init__(self, mean=None, std=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = None if std is None else np.asarray(std, dtype=np.float64)

    def fit(self, arrays):
        stacked = np.asarray(arrays, dtype=np.float64)
        self.mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        self.std = np.where(std > 1e-12, std, 1.0)
        return self

    def transform(self, arrays):
        return (np.asarray(arrays) - self.mean) / self.std
