# %% [markdown]
# Evidence trees without a network
#
# The tree stage only needs a ranked list of wave attributes and the wave
# annotations.  Here the ranking is written by hand to show how the prefix
# length and tree height trade off on held-out records.

# %%
import numpy as np

from collocative.evidence import AttributeTable, evaluate_grid, select_attributes
from collocative.signal import LABELS, SyntheticParams, annotate_waves, label_index, synthesize_ecg

params = SyntheticParams(noise_std=0.05, rr_jitter=0.015, beat_jitter=0.01)
records = [synthesize_ecg(params, LABELS[i % 2], seed=i, record_id=f"r{i}") for i in range(300)]
labels = np.array([label_index(r.label) for r in records])
table = AttributeTable(records, [annotate_waves(r) for r in records])

# %% A ranking that starts with uninformative waves
ranked = ["P", "Q", "R", ("P", "Q"), ("ST", "TP"), "ST", "TP"]
grid = evaluate_grid(ranked, len(ranked), 4, table, labels)
print("held-out accuracy, rows t = 1..7, columns h = 1..4")
print(np.round(grid, 1))

# %% The sweep picks the shortest prefix that reaches the best score
sel = select_attributes(ranked, len(ranked), 4, table, labels)
sel.model.class_names = LABELS
print("selected attributes:", sel.attributes, "height", sel.height, "score", sel.score)
print(sel.model.to_text())

# %% A boosted forest on the same cell, for comparison
forest = select_attributes(ranked, len(ranked), 4, table, labels, builder="forest")
print("forest:", forest.attributes, forest.height, forest.score)
