"""Choose the ranked-attribute prefix and tree height that score best."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidBounds
from ..evaluation import compute_metrics, stratified_holdout
from .forest import build_forest
from .tree import build_tree

EVALUATORS = ("accuracy", "f1")


@dataclass
class Selection:
    attributes: list
    height: int
    score: float
    grid: np.ndarray  # (t_max, h_max) held-out scores
    model: object = None


def _builder(kind, seed, rounds=30):
    if kind == "tree":
        return lambda x, y, h, names: build_tree(x, y, h, feature_names=names)
    if kind == "forest":
        return lambda x, y, h, names: build_forest(
            x, y, rounds=rounds, max_depth=h, seed=seed, feature_names=names
        )
    raise InvalidBounds(f"unknown builder {kind!r}")


def evaluate_grid(ranked, t_max, h_max, table, labels, evaluator="accuracy",
                  builder="tree", seed=0, heldout=0.2, rounds=30):
    """Held-out score of every ``(t, h)`` cell, ``t`` and ``h`` 1-based."""
    if evaluator not in EVALUATORS:
        raise InvalidBounds(f"unknown evaluator {evaluator!r}")
    labels = np.asarray(labels, dtype=int)
    train, test = stratified_holdout(labels, heldout, seed)
    build = _builder(builder, seed, rounds)
    grid = np.zeros((t_max, h_max))
    for t in range(1, t_max + 1):
        attrs = ranked[:t]
        x = table.matrix(attrs)
        names = table.column_names(attrs)
        for h in range(1, h_max + 1):
            model = build(x[train], labels[train], h, names)
            m = compute_metrics(model.predict(x[test]), labels[test])
            grid[t - 1, h - 1] = getattr(m, evaluator)
    return grid


def select_attributes(ranked, t_max, h_max, table, labels, evaluator="accuracy",
                      builder="tree", seed=0, heldout=0.2, rounds=30):
    """Exhaustive sweep over ranked prefixes ``1..t_max`` and heights ``1..h_max``.

    Ties prefer the smaller prefix, then the shorter tree.  The returned model
    is refit on the training part with the chosen cell.
    """
    ranked = list(ranked)
    if t_max < 1 or h_max < 1 or t_max > len(ranked):
        raise InvalidBounds(f"t_max={t_max}, h_max={h_max} with {len(ranked)} ranked attributes")
    grid = evaluate_grid(ranked, t_max, h_max, table, labels, evaluator, builder, seed,
                         heldout, rounds)
    best_t, best_h = 1, 1
    for t in range(1, t_max + 1):
        for h in range(1, h_max + 1):
            if grid[t - 1, h - 1] > grid[best_t - 1, best_h - 1]:
                best_t, best_h = t, h
    attrs = ranked[:best_t]
    labels = np.asarray(labels, dtype=int)
    train, _ = stratified_holdout(labels, heldout, seed)
    x = table.matrix(attrs)
    model = _builder(builder, seed, rounds)(x[train], labels[train], best_h, table.column_names(attrs))
    return Selection(attrs, best_h, float(grid[best_t - 1, best_h - 1]), grid, model)
