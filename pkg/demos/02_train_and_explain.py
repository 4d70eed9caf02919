# %% [markdown]
# Train, evaluate and explain on a small synthetic cohort
#
# This is the whole pipeline at toy scale: 120 records, 3 folds and a few
# epochs.  It takes about a minute on a laptop.  The reference experiment uses
# 2,000 records and 10 folds (see tests/test_acceptance.py).

# %%
from pathlib import Path

from collocative.config import RunConfig
from collocative.pipeline import run_experiment, synthesize_dataset

cfg = RunConfig(out_dir=Path("demo-out/run"), synth_count=120, folds=3, epochs=6,
                segments=32, widths=(8, 16, 32))
cfg = cfg.with_overrides(manifest=synthesize_dataset(cfg))

# %%
result = run_experiment(cfg)
print(f"accuracy {result.cv.mean('accuracy'):.2f} +/- {result.cv.std('accuracy'):.2f}")
for k, fold in enumerate(result.cv.folds):
    print(f"  fold {k}: {fold.accuracy:.1f}")

# %% Which waves did the saliency maps point at?
print("unary ranking:", [g for g, _ in result.ranking.unary[:5]])
print("pair ranking:", ["|".join(p) for p, _ in result.ranking.comparative[:5]])

# %% The selected decision tree, over the durations of the top pairs
sel = result.selections["comparative"]["tree"]
print(f"t={len(sel.attributes)} h={sel.height} held-out accuracy {sel.score:.1f}")
print(sel.model.to_text())

# %%
print("artifacts:")
for path in result.artifact_paths():
    print("  ", path.relative_to(cfg.out_dir))
