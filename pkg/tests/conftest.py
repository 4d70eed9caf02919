import numpy as np
import pytest

from collocative.signal import SyntheticParams, synthesize_ecg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def clean_record():
    return synthesize_ecg(SyntheticParams(), "non_eating", seed=5)


@pytest.fixture
def noisy_params():
    return SyntheticParams(noise_std=0.05, rr_jitter=0.015, beat_jitter=0.01, amplitude_jitter=0.05)


def small_config(out_dir, **kw):
    """A run small enough for unit tests: 24 records, 3 folds, 2 epochs."""
    from collocative.config import RunConfig

    base = dict(out_dir=out_dir, segments=16, widths=(4, 8), epochs=2, batch_size=8,
                folds=3, synth_count=24, t_max=3, h_max=2, forest_rounds=5)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    from collocative.pipeline import run_experiment, synthesize_dataset

    cfg = small_config(tmp_path_factory.mktemp("run"))
    synthesize_dataset(cfg)
    return cfg, run_experiment(cfg)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
