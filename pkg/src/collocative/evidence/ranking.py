"""Rank wave genres and genre pairs by decoded saliency."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ..errors import EmptyRatings, ShapeMismatch
from ..signal import GENRES


def pair_key(a, b):
    return tuple(sorted((a, b)))


def attribute_name(attr):
    return attr if isinstance(attr, str) else "|".join(attr)


def parse_attribute(text):
    parts = text.split("|")
    return parts[0] if len(parts) == 1 else pair_key(*parts)


def comparative_candidates(genres=GENRES):
    """All unordered genre pairs including self pairs: 120 for 15 genres."""
    return sorted({pair_key(a, b) for a, b in combinations_with_replacement(genres, 2)})


@dataclass
class AttributeRanking:
    unary: list  # [(genre, score)] best first
    comparative: list  # [((genre, genre), score)] best first

    def unary_attributes(self):
        return [a for a, _ in self.unary]

    def comparative_attributes(self):
        return [a for a, _ in self.comparative]


def aggregate_ratings(ratings):
    """Mean unary vector and mean pair matrix over ``[(unary, pairs), ...]``."""
    ratings = list(ratings)
    if not ratings:
        raise EmptyRatings("no decoded ratings to aggregate")
    unary = np.mean([np.asarray(getattr(u, "values", u), dtype=np.float64) for u, _ in ratings], axis=0)
    pairs = np.mean([np.asarray(getattr(p, "values", p), dtype=np.float64) for _, p in ratings], axis=0)
    return unary, pairs


def rank_attributes(unary, pairs, genres=GENRES):
    """Descending order; ties fall back to lexicographic genre names.

    A cross pair scores the mean of its two orientations.
    """
    u = np.asarray(getattr(unary, "values", unary), dtype=np.float64)
    w = np.asarray(getattr(pairs, "values", pairs), dtype=np.float64)
    genres = tuple(genres)
    if u.size == 0 or w.size == 0:
        raise EmptyRatings("empty ratings")
    k = len(genres)
    if u.shape != (k,) or w.shape != (k, k):
        raise ShapeMismatch(f"ratings do not match {k} genres")
    unary_list = sorted(zip(genres, u.tolist()), key=lambda t: (-t[1], t[0]))
    index = {g: i for i, g in enumerate(genres)}
    scored = []
    for a, b in comparative_candidates(genres):
        i, j = index[a], index[b]
        score = w[i, i] if i == j else 0.5 * (w[i, j] + w[j, i])
        scored.append(((a, b), float(score)))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return AttributeRanking(unary_list, scored)
