import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from collocative.errors import (
    EmptySegment, InvalidParams, NoBeatsDetected, TooFewSamples,
)
from collocative.signal import (
    GENRES, EcgRecord, SyntheticParams, WaveAnnotation, annotate_waves,
    detect_r_peaks, extract_feature, normalize, segment, synthesize_ecg,
)


def _record(n, rate=2):
    return EcgRecord("r", rate, np.arange(n, dtype=float), "eating")


def test_segment_floor_division_drops_remainder():
    rec = EcgRecord("r", 100, np.arange(1000.0), "eating")
    s = segment(rec, 64)
    assert s.segments.shape == (64, 15)
    # 1000 - 64 * 15 = 40 trailing samples are gone
    assert s.segments[-1, -1] == 959.0


def test_segment_exact_division():
    s = segment(_record(10, rate=10), 2)
    np.testing.assert_array_equal(s.segments, [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]])


def test_segment_too_few_samples():
    with pytest.raises(TooFewSamples):
        segment(_record(3, rate=3), 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(10, 400), st.integers(2, 5))
def test_segments_are_a_partition_prefix(length, n):
    rec = EcgRecord("r", 10, np.random.default_rng(length).normal(size=length), "eating")
    s = segment(rec, n)
    k = length // n
    np.testing.assert_array_equal(s.segments.ravel(), rec.samples[: n * k])
    assert s.spans()[-1, 1] == n * k


def test_record_needs_one_second():
    with pytest.raises(TooFewSamples):
        EcgRecord("r", 100, np.zeros(99), "eating")
    with pytest.raises(InvalidParams):
        EcgRecord("r", 10, np.zeros(20), "walking")


def test_feature_examples():
    assert extract_feature([1, 2, 3], "mean") == 2.0
    assert extract_feature([4, 4, 4, 4], "std") == 0.0
    assert extract_feature([1, -1, 1, -1], "zero_crossing_rate") == 1.0
    with pytest.raises(EmptySegment):
        extract_feature([], "mean")


def test_feature_permutation_behaviour():
    w = np.array([1.0, 2.0, -1.0, -2.0])
    p = w[[0, 2, 1, 3]]
    assert extract_feature(w, "mean") == pytest.approx(extract_feature(p, "mean"))
    assert extract_feature(w, "zero_crossing_rate") != extract_feature(p, "zero_crossing_rate")


def test_normalize_zero_mean_unit_std(clean_record):
    x = normalize(clean_record).samples
    assert abs(x.mean()) < 1e-12
    assert x.std() == pytest.approx(1.0)


def test_synthetic_length_and_determinism():
    p = replace(SyntheticParams(), sample_rate=100)
    a = synthesize_ecg(p, "eating", seed=3)
    b = synthesize_ecg(p, "eating", seed=3)
    assert len(a.samples) == 1000
    np.testing.assert_array_equal(a.samples, b.samples)
    assert a.annotation == b.annotation


def test_synthetic_peak_spacing_matches_rr(clean_record):
    peaks = detect_r_peaks(clean_record.samples, clean_record.sample_rate)
    spacing = np.diff(peaks)
    target = 0.833 * clean_record.sample_rate
    assert np.all(np.abs(spacing - target) <= 1.0)


def test_annotation_has_every_genre_in_order(clean_record):
    ann = clean_record.annotation
    assert ann.n_beats >= 10
    for beat in ann.beats:
        assert set(beat) == set(GENRES)
        spans = [beat[g] for g in GENRES]
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            assert a0 <= a1 <= b0 <= b1
        onsets = [beat[g][0] for g in ("P", "Q", "R", "S", "T")]
        assert onsets == sorted(onsets) and len(set(onsets)) == 5


def test_class_effect_stretches_st_and_tp():
    p = SyntheticParams()
    base = dict(zip(GENRES, p.genre_durations("non_eating")))
    eat = dict(zip(GENRES, p.genre_durations("eating")))
    for g in GENRES:
        ratio = 1.15 if g in ("ST", "TP") else 1.0
        assert eat[g] == pytest.approx(base[g] * ratio)


def test_invalid_params():
    with pytest.raises(InvalidParams):
        synthesize_ecg(replace(SyntheticParams(), noise_std=-1), "eating")
    with pytest.raises(InvalidParams):
        synthesize_ecg(replace(SyntheticParams(), rr_interval_s=0.3), "eating")


def test_annotate_passes_existing_annotation(clean_record):
    assert annotate_waves(clean_record) is clean_record.annotation


def test_annotate_detects_r_peaks_near_truth(clean_record):
    bare = replace(clean_record, annotation=None)
    est = annotate_waves(bare)
    truth = clean_record.annotation.r_peaks()
    found = est.r_peaks()
    for t in truth:
        assert np.min(np.abs(found - t)) <= 2


def test_annotate_flat_signal():
    with pytest.raises(NoBeatsDetected):
        annotate_waves(EcgRecord("z", 100, np.zeros(500), "eating"))


def test_annotation_rejects_overlap():
    with pytest.raises(InvalidParams):
        WaveAnnotation([{"P": (0, 10), "Q": (5, 12)}])
