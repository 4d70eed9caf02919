"""Gradient-boosted regression trees with logistic loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyDataset
from .tree import candidate_splits, canonical_order


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


@dataclass
class RegressionNode:
    weight: float = 0.0
    feature: int | None = None
    threshold: float | None = None
    left: "RegressionNode | None" = None
    right: "RegressionNode | None" = None

    @property
    def is_leaf(self):
        return self.feature is None

    def value(self, row):
        node = self
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.weight


@dataclass
class Forest:
    trees: list
    learning_rate: float
    init_score: float
    feature_names: list = field(default_factory=list)
    class_names: tuple = ("0", "1")

    @property
    def rounds(self):
        return len(self.trees)

    def decision_function(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        score = np.full(len(x), self.init_score)
        for tree in self.trees:
            score += self.learning_rate * np.array([tree.value(r) for r in x])
        return score

    def predict_proba(self, x):
        return sigmoid(self.decision_function(x))

    def predict(self, x):
        return (self.predict_proba(x) > 0.5).astype(int)

    def to_text(self):
        lines = [f"init_score {self.init_score:.6g}  learning_rate {self.learning_rate:g}"]

        def walk(node, depth):
            pad = "  " * depth
            if node.is_leaf:
                lines.append(f"{pad}-> {node.weight:+.6g}")
                return
            name = (self.feature_names[node.feature]
                    if node.feature < len(self.feature_names) else f"x{node.feature}")
            lines.append(f"{pad}if {name} <= {node.threshold:.6g}:")
            walk(node.left, depth + 1)
            lines.append(f"{pad}else:")
            walk(node.right, depth + 1)

        for k, tree in enumerate(self.trees):
            lines.append(f"tree {k}")
            walk(tree, 1)
        return "\n".join(lines) + "\n"


def _fit_tree(x, g, h, idx, depth, max_depth, reg_lambda, min_child_weight):
    gs, hs = g[idx].sum(), h[idx].sum()
    node = RegressionNode(weight=float(-gs / (hs + reg_lambda)))
    if depth >= max_depth or len(idx) < 2:
        return node
    parent = gs * gs / (hs + reg_lambda)
    best = None
    for j in range(x.shape[1]):
        order, pos, thr = candidate_splits(x[idx, j])
        if len(pos) == 0:
            continue
        cg = np.cumsum(g[idx][order])
        ch = np.cumsum(h[idx][order])
        gl, hl = cg[pos], ch[pos]
        gr, hr = gs - gl, hs - hl
        gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent
        ok = (hl >= min_child_weight) & (hr >= min_child_weight)
        if not ok.any():
            continue
        gain = np.where(ok, gain, -np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0] + 1e-12:
            best = (float(gain[i]), j, float(thr[i]))
    # non-positive gains are kept only at exactly zero, so symmetric
    # interactions such as XOR can still open a split
    if best is None or best[0] < -1e-12:
        return node
    _, j, thr = best
    go_left = x[idx, j] <= thr
    node.feature, node.threshold = j, thr
    node.left = _fit_tree(x, g, h, idx[go_left], depth + 1, max_depth, reg_lambda, min_child_weight)
    node.right = _fit_tree(x, g, h, idx[~go_left], depth + 1, max_depth, reg_lambda, min_child_weight)
    return node


def build_forest(x, y, rounds=50, learning_rate=0.3, max_depth=3, seed=0,
                 subsample=1.0, reg_lambda=1.0, min_child_weight=1e-3,
                 feature_names=None, class_names=("0", "1")):
    """Additive logistic model; each round fits a tree to the loss gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise EmptyDataset("cannot boost on no records")
    order = canonical_order(x, y)
    x, y = x[order], y[order]
    prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    init = float(np.log(prior / (1 - prior)))
    rng = np.random.default_rng(seed)
    score = np.full(len(y), init)
    trees = []
    for _ in range(rounds):
        p = sigmoid(score)
        g, h = p - y, p * (1 - p)
        if subsample < 1.0:
            k = max(1, int(round(subsample * len(y))))
            idx = np.sort(rng.choice(len(y), size=k, replace=False))
        else:
            idx = np.arange(len(y))
        tree = _fit_tree(x, g, h, idx, 0, max_depth, reg_lambda, min_child_weight)
        trees.append(tree)
        score += learning_rate * np.array([tree.value(r) for r in x])
    return Forest(trees, learning_rate, init, list(feature_names or []), tuple(class_names))
