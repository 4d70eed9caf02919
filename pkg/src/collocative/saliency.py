"""Grad-CAM maps for every block, fused into one tensor-level saliency map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMapList, ShapeMismatch


@dataclass
class SaliencyMap:
    values: np.ndarray  # (n, n), entries in [0, 1]
    class_id: int
    normalization: list = field(default_factory=list)  # (min, max) of each raw block map

    @property
    def n(self):
        return self.values.shape[0]


def layer_cam(activations, gradients):
    """ReLU of the channel sum weighted by spatially averaged gradients."""
    a = np.asarray(activations, dtype=np.float64)
    g = np.asarray(gradients, dtype=np.float64)
    if a.shape != g.shape or a.ndim != 3:
        raise ShapeMismatch(f"activations {a.shape} and gradients {g.shape} differ")
    weights = g.mean(axis=(0, 1))
    return np.maximum(a @ weights, 0.0)


def _interp_matrix(size_in, size_out):
    # half-pixel centres, edge clamped (align_corners=False)
    scale = size_in / size_out
    src = np.clip((np.arange(size_out) + 0.5) * scale - 0.5, 0.0, size_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, size_in - 1)
    frac = src - lo
    r = np.zeros((size_out, size_in))
    r[np.arange(size_out), lo] += 1.0 - frac
    r[np.arange(size_out), hi] += frac
    return r


def resize_bilinear(image, size):
    a = np.asarray(image, dtype=np.float64)
    rows = _interp_matrix(a.shape[0], size)
    cols = _interp_matrix(a.shape[1], size)
    return rows @ a @ cols.T


def _minmax(a):
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        return (a - lo) / (hi - lo), (lo, hi)
    return np.zeros_like(a), (lo, hi)


def fuse_maps(maps, target, class_id=-1):
    """Normalize each block map to [0, 1], resize to ``target``, average."""
    maps = list(maps)
    if not maps:
        raise EmptyMapList("no block maps to fuse")
    acc = np.zeros((target, target))
    norms = []
    for cam in maps:
        scaled, rng = _minmax(np.asarray(cam, dtype=np.float64))
        norms.append(rng)
        acc += resize_bilinear(scaled, target)
    return SaliencyMap(np.clip(acc / len(maps), 0.0, 1.0), class_id, norms)


def collocative_saliency(model, x, class_ids=None):
    """Fused saliency for a batch of tensors ``(batch, n, n, views)``.

    ``class_ids`` defaults to each record's predicted class.
    """
    x = np.asarray(x)
    if x.ndim == 3:
        x = x[None]
    probs, cache = model.forward(x)
    if class_ids is None:
        class_ids = np.argmax(probs, axis=1)
    class_ids = np.broadcast_to(np.asarray(class_ids, dtype=int), (len(x),))
    dlogits = np.zeros_like(probs)
    dlogits[np.arange(len(x)), class_ids] = 1.0
    _, map_grads = model.backward_logits(cache, dlogits, need_maps=True)
    n = model.config.input_size
    out = []
    for b in range(len(x)):
        cams = [layer_cam(blk["f_star"][b], g[b])
                for blk, g in zip(cache["blocks"], map_grads)]
        out.append(fuse_maps(cams, n, int(class_ids[b])))
    return out


def diagonal_profile(values):
    """Mean of each diagonal offset ``d = |i - j|`` for ``d = 0 .. n-1``."""
    a = np.asarray(values)
    n = a.shape[0]
    return np.array([0.5 * (np.diagonal(a, d).mean() + np.diagonal(a, -d).mean())
                     for d in range(n)])
