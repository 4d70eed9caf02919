"""Coached attention gates: diagonal-periodic cosine masks and their gradients.

A gate for an ``m x m`` feature map is

    raw[i, j] = alpha * cos(2 pi T |i - j| / m + beta) + gamma

clamped to ``[0, 1]``.  Feature maps are regulated as ``F * mask + F``.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import ShapeMismatch

PERIOD_MIN = 0.5


@dataclass
class CagParams:
    alpha: float = 0.25
    beta: float = 0.0
    gamma: float = 0.5
    period: float = 12.0

    def as_array(self):
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, values):
        a, b, g, t = (float(v) for v in values)
        return cls(a, b, g, t)


@dataclass
class AttentionMask:
    values: np.ndarray
    clamped: np.ndarray  # True where the raw value fell outside [0, 1]

    @property
    def m(self):
        return self.values.shape[0]


def _offsets(m):
    idx = np.arange(m)
    return np.abs(idx[:, None] - idx[None, :]).astype(np.float64)


def _phase(params, m):
    return 2.0 * np.pi * params.period * _offsets(m) / m + params.beta


def build_mask(params, m):
    raw = params.alpha * np.cos(_phase(params, m)) + params.gamma
    clamped = (raw < 0.0) | (raw > 1.0)
    return AttentionMask(np.clip(raw, 0.0, 1.0), clamped)


def regulate(feature_map, mask):
    """``F * mask + F`` over every channel; channels are the last axis."""
    f = np.asarray(feature_map)
    if f.shape[-3:-1] != mask.values.shape:
        raise ShapeMismatch(
            f"mask {mask.values.shape} does not match feature map {f.shape[-3:-1]}"
        )
    return f * (mask.values[..., None] + 1.0).astype(f.dtype, copy=False)


def regulate_backward(upstream, feature_map, mask):
    """Gradients of the regulated map w.r.t. its input map and the mask values."""
    d_map = upstream * (mask.values[..., None] + 1.0).astype(upstream.dtype, copy=False)
    prod = upstream * feature_map
    d_mask = prod.reshape(-1, *mask.values.shape, prod.shape[-1]).sum(axis=(0, -1))
    return d_map, d_mask


def param_gradients(upstream, params, m, clamp_state):
    """``(d_alpha, d_beta, d_gamma, d_period)`` from ``dY/dOmega``.

    Cells whose raw value was clamped do not contribute.
    """
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != (m, m) or np.shape(clamp_state) != (m, m):
        raise ShapeMismatch(f"expected ({m}, {m}) upstream gradient")
    g = np.where(clamp_state, 0.0, g)
    phase = _phase(params, m)
    cos, sin = np.cos(phase), np.sin(phase)
    d_alpha = np.sum(g * cos)
    d_beta = -np.sum(g * params.alpha * sin)
    d_gamma = np.sum(g)
    d_period = -np.sum(g * params.alpha * sin * 2.0 * np.pi * _offsets(m) / m)
    return float(d_alpha), float(d_beta), float(d_gamma), float(d_period)


def clamp_period(period, m):
    return float(np.clip(period, PERIOD_MIN, max(PERIOD_MIN, m / 2.0)))


def stripe_spacing(mask_values):
    """Lag of the first non-zero autocorrelation maximum of the diagonal profile."""
    profile = np.asarray(mask_values)[0]
    p = profile - profile.mean()
    ac = np.correlate(p, p, mode="full")[len(p) - 1:]
    for lag in range(1, len(ac) - 1):
        if ac[lag] >= ac[lag - 1] and ac[lag] >= ac[lag + 1] and ac[lag] > 0:
            return lag
    return None


def estimate_period(signals, min_lag=2):
    """Beats per window from the mean autocorrelation of (zero-mean) signals.

    ``signals`` is a ``(records, samples)`` array.  Returns ``len / lag`` where
    ``lag`` is the strongest autocorrelation peak after the first zero
    crossing; None when no peak exists.
    """
    x = np.atleast_2d(np.asarray(signals, dtype=np.float64))
    x = x - x.mean(axis=1, keepdims=True)
    n = x.shape[1]
    spec = np.fft.rfft(x, 2 * n)
    ac = np.fft.irfft(np.abs(spec) ** 2, 2 * n)[:, :n].mean(axis=0)
    if ac[0] <= 0:
        return None
    ac = ac / ac[0]
    below = np.nonzero(ac[1:] < 0)[0]
    if len(below) == 0:
        return None
    start = max(int(below[0]) + 1, min_lag)
    stop = n // 2
    if start >= stop:
        return None
    lag = start + int(np.argmax(ac[start:stop]))
    return n / lag
