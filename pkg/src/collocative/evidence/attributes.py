"""Per-record numeric values of genre and genre-pair attributes."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyInput, MissingGenre
from .ranking import attribute_name


def _measurements(annotation, attribute, sample_rate):
    if isinstance(attribute, str):
        spans = annotation.instances(attribute)
        if not spans:
            raise MissingGenre(attribute)
        return np.array([(off - on) / sample_rate for on, off in spans])
    a, b = attribute
    if a == b:
        spans = annotation.instances(a)
        if not spans:
            raise MissingGenre(a)
        onsets = np.array([on for on, _ in spans], dtype=np.float64)
        # consecutive instances of the same genre; undefined for a single beat
        return np.diff(onsets) / sample_rate
    values = []
    for beat in annotation.beats:
        if a in beat and b in beat:
            values.append(abs(beat[b][0] - beat[a][0]) / sample_rate)
    if not values:
        raise MissingGenre(f"no beat holds both {a} and {b}")
    return np.array(values)


def attribute_features(record, annotation, attribute):
    """``(mean, std)`` in seconds; population std.

    A genre is measured by its instance durations.  A pair of distinct genres
    is measured by the onset-to-onset gap inside each beat; a self pair by
    the gap between consecutive beats.
    """
    values = _measurements(annotation, attribute, record.sample_rate)
    if values.size == 0:
        return 0.0, 0.0
    return float(values.mean()), float(values.std())


class AttributeTable:
    """Lazily computed ``(records, 2)`` feature blocks keyed by attribute."""

    def __init__(self, records, annotations):
        if not records:
            raise EmptyInput("no records")
        self.records = list(records)
        self.annotations = list(annotations)
        self._cache = {}

    def block(self, attribute):
        if attribute not in self._cache:
            self._cache[attribute] = np.array([
                attribute_features(r, a, attribute)
                for r, a in zip(self.records, self.annotations)
            ])
        return self._cache[attribute]

    def matrix(self, attributes):
        """Feature matrix with a ``mean`` and ``std`` column per attribute."""
        return np.concatenate([self.block(a) for a in attributes], axis=1)

    @staticmethod
    def column_names(attributes):
        names = []
        for a in attributes:
            names += [f"{attribute_name(a)}:mean", f"{attribute_name(a)}:std"]
        return names
