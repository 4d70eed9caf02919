# %% [markdown]
# Relation tensors and periodic attention masks
#
# A single synthetic ECG record is cut into 64 windows.  Every view compares
# all pairs of windows, so a regular heartbeat shows up as stripes parallel to
# the main diagonal.  The attention mask is built to reinforce exactly those
# stripes.

# %%
from pathlib import Path

import numpy as np

from collocative.cag import CagParams, build_mask, estimate_period, stripe_spacing
from collocative.signal import SyntheticParams, normalize, segment, synthesize_ecg
from collocative.svg import heatmap_svg
from collocative.tensor import MULTI_VIEW, build_tensor, regularized_inverse_covariance

out = Path("demo-out")
out.mkdir(exist_ok=True)

# %%
record = synthesize_ecg(SyntheticParams(noise_std=0.02), "non_eating", seed=7)
series = segment(normalize(record), 64)
print(record.id, len(record.samples), "samples ->", series.segments.shape)

# %% The seven views, one relation matrix each
cov_inv = regularized_inverse_covariance(series.segments)
tensor = build_tensor(series, MULTI_VIEW, cov_inv)
for channel in tensor.channels:
    v = channel.values
    print(f"{channel.view.name:20s} range [{v.min():.3f}, {v.max():.3f}]")
    (out / f"view_{channel.view.metric}.svg").write_text(
        heatmap_svg(v, title=channel.view.name))

# %% Beats per window, read off the autocorrelation of the raw signal
beats = estimate_period(record.samples[None, :])
print(f"about {beats:.1f} beats per window")

# %% A mask with that many stripes
mask = build_mask(CagParams(0.5, 0.0, 0.5, beats), 64)
print("stripe spacing in cells:", stripe_spacing(mask.values))
(out / "mask.svg").write_text(heatmap_svg(mask.values, title="attention mask"))

# %% Where the mask is high, the windows tend to be close in the euclidean view
euclid = tensor.channels[0].values
off = ~np.eye(64, dtype=bool)
corr = np.corrcoef(mask.values[off], -euclid[off])[0, 1]
print(f"correlation between mask and negated distance: {corr:.2f}")
