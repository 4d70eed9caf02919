"""Entropy decision trees with midpoint thresholds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyDataset, InvalidBounds


def entropy(counts):
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, total, out=np.zeros_like(counts), where=total > 0)
    logs = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=-1)


def canonical_order(x, y):
    """Row order that depends only on the multiset of ``(x, y)`` rows."""
    keys = [y] + [x[:, j] for j in reversed(range(x.shape[1]))]
    return np.lexsort(keys)


def candidate_splits(column):
    """Sorted order plus split positions and midpoint thresholds of one feature."""
    order = np.argsort(column, kind="stable")
    xs = column[order]
    pos = np.nonzero(xs[:-1] < xs[1:])[0]
    thr = 0.5 * (xs[pos] + xs[pos + 1])
    # adjacent floats can round the midpoint up onto the right value
    thr = np.where(thr < xs[pos + 1], thr, xs[pos])
    return order, pos, thr


def best_split(x, y, n_classes=2):
    """``(gain, feature, threshold)`` maximising information gain, or None.

    Ties go to the lower feature index, then the lower threshold.
    """
    n = len(y)
    onehot = np.eye(n_classes)[y]
    parent = entropy(onehot.sum(axis=0))
    best = None
    for j in range(x.shape[1]):
        order, pos, thr = candidate_splits(x[:, j])
        if len(pos) == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)
        left = cum[pos]
        right = cum[-1] - left
        nl = left.sum(axis=1)
        gain = parent - (nl * entropy(left) + (n - nl) * entropy(right)) / n
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0] + 1e-12:
            best = (float(gain[i]), j, float(thr[i]))
    return best


@dataclass
class Node:
    counts: np.ndarray
    feature: int | None = None
    threshold: float | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self):
        return self.feature is None

    @property
    def label(self):
        return int(np.argmax(self.counts))


@dataclass
class DecisionTree:
    root: Node
    feature_names: list = field(default_factory=list)
    class_names: tuple = ("0", "1")

    def height(self):
        def h(node):
            return 0 if node.is_leaf else 1 + max(h(node.left), h(node.right))
        return h(self.root)

    def features_used(self):
        used = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                used.add(node.feature)
                stack += [node.left, node.right]
        return used

    def predict(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.empty(len(x), dtype=int)
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.label
        return out

    def _fname(self, j):
        return self.feature_names[j] if j < len(self.feature_names) else f"x{j}"

    def to_text(self):
        lines = []

        def walk(node, depth):
            pad = "  " * depth
            counts = "/".join(str(int(c)) for c in node.counts)
            if node.is_leaf:
                lines.append(f"{pad}-> {self.class_names[node.label]} [{counts}]")
                return
            lines.append(f"{pad}if {self._fname(node.feature)} <= {node.threshold:.6g}:")
            walk(node.left, depth + 1)
            lines.append(f"{pad}else:  # {self._fname(node.feature)} > {node.threshold:.6g}")
            walk(node.right, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"

    def to_graph(self):
        """``node``/``edge`` lines for external rendering."""
        lines = []
        counter = iter(range(1 << 30))

        def walk(node):
            nid = next(counter)
            counts = "/".join(str(int(c)) for c in node.counts)
            if node.is_leaf:
                lines.append(f'node {nid} "{self.class_names[node.label]} [{counts}]" leaf')
            else:
                lines.append(
                    f'node {nid} "{self._fname(node.feature)} <= {node.threshold:.6g}" split'
                )
                left = walk(node.left)
                lines.append(f"edge {nid} {left} yes")
                right = walk(node.right)
                lines.append(f"edge {nid} {right} no")
            return nid

        walk(self.root)
        return "\n".join(lines) + "\n"


def build_tree(x, y, max_height, feature_names=None, class_names=("0", "1"), n_classes=2):
    """Greedy top-down induction up to ``max_height`` splits deep.

    Growth stops at pure nodes and at nodes with no feature left to split on.
    A zero-gain split is still taken when allowed by the height, which lets
    interacting features (XOR) be separated.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise EmptyDataset("cannot grow a tree on no records")
    if max_height is not None and max_height < 0:
        raise InvalidBounds("max_height must be >= 0")
    order = canonical_order(x, y)
    x, y = x[order], y[order]

    def grow(idx, depth):
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        node = Node(counts)
        if np.count_nonzero(counts) <= 1:
            return node
        if max_height is not None and depth >= max_height:
            return node
        split = best_split(x[idx], y[idx], n_classes)
        if split is None:
            return node
        _, j, thr = split
        go_left = x[idx, j] <= thr
        node.feature, node.threshold = j, thr
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node

    root = grow(np.arange(len(y)), 0)
    return DecisionTree(root, list(feature_names or []), tuple(class_names))
