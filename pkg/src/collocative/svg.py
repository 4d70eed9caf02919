"""Static SVG markup for heatmaps and tree diagrams."""

from __future__ import annotations

from html import escape

import numpy as np


def _color(v):
    # white -> dark red ramp
    v = float(np.clip(v, 0.0, 1.0))
    r = 255
    g = int(round(255 * (1 - v)))
    b = int(round(255 * (1 - v) ** 2))
    if v > 0.75:
        r = int(round(255 - (v - 0.75) * 4 * 115))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(values, cell=6, title=None):
    a = np.asarray(values, dtype=np.float64)
    lo, hi = a.min(), a.max()
    scaled = (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a)
    rows, cols = a.shape
    top = 20 if title else 0
    w, h = cols * cell, rows * cell + top
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}">']
    if title:
        out.append(f'<text x="2" y="14" font-family="monospace" font-size="12">{escape(title)}</text>')
    for i in range(rows):
        for j in range(cols):
            out.append(f'<rect x="{j * cell}" y="{top + i * cell}" width="{cell}" '
                       f'height="{cell}" fill="{_color(scaled[i, j])}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def tree_svg(tree):
    """Layered drawing of a :class:`DecisionTree`."""
    positions = {}
    labels = {}
    edges = []
    leaves = iter(range(1 << 30))

    def place(node, depth, nid=[0]):
        me = nid[0]
        nid[0] += 1
        counts = "/".join(str(int(c)) for c in node.counts)
        if node.is_leaf:
            positions[me] = (next(leaves), depth)
            labels[me] = f"{tree.class_names[node.label]} [{counts}]"
            return me
        left = place(node.left, depth + 1)
        right = place(node.right, depth + 1)
        positions[me] = ((positions[left][0] + positions[right][0]) / 2, depth)
        labels[me] = f"{tree._fname(node.feature)} <= {node.threshold:.4g}"
        edges.extend([(me, left, "yes"), (me, right, "no")])
        return me

    place(tree.root, 0)
    dx, dy, pad = 150, 70, 20
    width = int((max(p[0] for p in positions.values()) + 1) * dx + 2 * pad)
    height = int((max(p[1] for p in positions.values()) + 1) * dy + 2 * pad)

    def xy(k):
        x, d = positions[k]
        return pad + x * dx + dx / 2, pad + d * dy + 15

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    for a, b, tag in edges:
        (x1, y1), (x2, y2) = xy(a), xy(b)
        out.append(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" stroke="#555"/>')
        out.append(f'<text x="{(x1 + x2) / 2:.1f}" y="{(y1 + y2) / 2:.1f}" '
                   f'font-family="monospace" font-size="9">{tag}</text>')
    for k in sorted(positions):
        x, y = xy(k)
        out.append(f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="middle" '
                   f'font-family="monospace" font-size="10">{escape(labels[k])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
