"""ECG records, segmentation, unary features and a synthetic annotated generator."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from .errors import EmptySegment, InvalidParams, NoBeatsDetected, TooFewSamples

LABELS = ("non_eating", "eating")
POSITIVE_LABEL = "eating"

# Beat sub-intervals in time order; every synthetic beat is a contiguous
# partition into these 15 genres.
GENRES = (
    "head", "P_onP", "P", "PQ", "Q", "QR", "R", "RS",
    "S", "ST", "T", "TT_off", "other", "TP", "Tail",
)

FEATURE_KINDS = ("mean", "std", "zero_crossing_rate")

# genre whose end boundary carries each wave's extremum
WAVE_ANCHORS = {"P": "P_onP", "Q": "PQ", "R": "R", "S": "S", "T": "ST"}


def label_index(label):
    return LABELS.index(label)


@dataclass
class WaveAnnotation:
    """Per-beat genre intervals as half-open sample spans ``[onset, offset)``."""

    beats: list
    record_id: str | None = None

    def __post_init__(self):
        for k, beat in enumerate(self.beats):
            unknown = set(beat) - set(GENRES)
            if unknown:
                raise InvalidParams(f"beat {k}: unknown genres {sorted(unknown)}")
            spans = sorted(beat.values())
            for (a0, a1), (b0, _) in zip(spans, spans[1:]):
                if a1 > b0:
                    raise InvalidParams(f"beat {k}: overlapping intervals")
            for on, off in spans:
                if off < on:
                    raise InvalidParams(f"beat {k}: interval ends before it starts")

    @property
    def n_beats(self):
        return len(self.beats)

    def instances(self, genre):
        return [beat[genre] for beat in self.beats if genre in beat]

    def r_peaks(self):
        """R-peak sample of every beat (the end of the R upstroke)."""
        return np.array([beat["R"][1] for beat in self.beats if "R" in beat], dtype=int)

    def __eq__(self, other):
        if not isinstance(other, WaveAnnotation):
            return NotImplemented
        return self.beats == other.beats


@dataclass
class EcgRecord:
    id: str
    sample_rate: int
    samples: np.ndarray
    label: str
    annotation: WaveAnnotation | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise InvalidParams("sample_rate must be positive")
        if self.samples.ndim != 1 or len(self.samples) < self.sample_rate:
            raise TooFewSamples(f"record {self.id!r} holds less than one second of data")
        if self.label not in LABELS:
            raise InvalidParams(f"unknown label {self.label!r}")

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate


@dataclass
class SegmentSeries:
    record_id: str
    segments: np.ndarray  # (n, segment_length)

    @property
    def n(self):
        return self.segments.shape[0]

    @property
    def segment_length(self):
        return self.segments.shape[1]

    def spans(self):
        """Half-open sample span of each segment in the source record."""
        starts = np.arange(self.n) * self.segment_length
        return np.stack([starts, starts + self.segment_length], axis=1)


def normalize(record):
    """Per-record z-score; a flat record is only centered."""
    x = record.samples
    std = x.std()
    centered = x - x.mean()
    return replace(record, samples=centered / std if std > 0 else centered)


def segment(record, n):
    """Cut a record into ``n`` contiguous equal windows, dropping the remainder."""
    if n < 2:
        raise TooFewSamples("need at least two segments")
    length = len(record.samples) // n
    if length < 2:
        raise TooFewSamples(
            f"{len(record.samples)} samples cannot fill {n} segments of >= 2 samples"
        )
    windows = record.samples[: n * length].reshape(n, length).copy()
    return SegmentSeries(record.id, windows)


def extract_feature(window, kind):
    x = np.asarray(window, dtype=np.float64)
    if x.size == 0:
        raise EmptySegment("cannot extract a feature from an empty window")
    if kind == "mean":
        return float(x.mean())
    if kind == "std":
        return float(x.std())
    if kind == "zero_crossing_rate":
        if x.size < 2:
            return 0.0
        signs = np.sign(x)
        return float(np.count_nonzero(signs[:-1] * signs[1:] < 0) / (x.size - 1))
    raise InvalidParams(f"unknown feature kind {kind!r}")


def segment_features(series, kind):
    """Vector of ``extract_feature`` over all segments (vectorised)."""
    s = series.segments
    if kind == "mean":
        return s.mean(axis=1)
    if kind == "std":
        return s.std(axis=1)
    return np.array([extract_feature(w, kind) for w in s])


def _default_durations():
    return {
        "head": 0.04, "P_onP": 0.05, "P": 0.05, "PQ": 0.07,
        "Q": 0.015, "QR": 0.015, "R": 0.02, "RS": 0.02, "S": 0.02,
        "ST": 0.12, "T": 0.08, "TT_off": 0.04, "other": 0.04, "Tail": 0.04,
    }


def _default_waves():
    # amplitude (mV), gaussian sigma (s)
    return {
        "P": (0.15, 0.02), "Q": (-0.15, 0.008), "R": (1.0, 0.010),
        "S": (-0.25, 0.008), "T": (0.30, 0.04),
    }


@dataclass
class SyntheticParams:
    """Generator settings.

    ``durations`` holds every genre except TP, which absorbs the rest of the
    RR interval.  For the eating class ST and TP are both stretched by
    ``class_effect``.  ``rr_jitter`` scales a whole record's timing,
    ``beat_jitter`` perturbs each genre of each beat independently.
    """

    sample_rate: int = 250
    duration_s: float = 10.0
    rr_interval_s: float = 0.833
    durations: dict = field(default_factory=_default_durations)
    waves: dict = field(default_factory=_default_waves)
    class_effect: float = 0.15
    noise_std: float = 0.0
    rr_jitter: float = 0.0
    beat_jitter: float = 0.0
    amplitude_jitter: float = 0.0
    random_phase: bool = True
    rng_seed: int = 0

    def validate(self):
        if self.sample_rate <= 0 or self.duration_s * self.sample_rate < self.sample_rate:
            raise InvalidParams("need a positive sample rate and at least one second")
        missing = set(GENRES) - {"TP"} - set(self.durations)
        if missing:
            raise InvalidParams(f"missing durations for {sorted(missing)}")
        if any(d <= 0 for d in self.durations.values()):
            raise InvalidParams("genre durations must be positive")
        if self.rr_interval_s <= sum(self.durations.values()):
            raise InvalidParams("rr_interval_s must exceed the summed genre durations")
        if set(self.waves) != set(WAVE_ANCHORS) or any(w[1] <= 0 for w in self.waves.values()):
            raise InvalidParams("waves need P, Q, R, S, T with positive widths")
        for name in ("noise_std", "rr_jitter", "beat_jitter", "amplitude_jitter"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        if self.class_effect <= -1:
            raise InvalidParams("class_effect must be > -1")

    def tp_duration(self):
        return self.rr_interval_s - sum(self.durations.values())

    def genre_durations(self, label):
        d = dict(self.durations)
        d["TP"] = self.tp_duration()
        if label == POSITIVE_LABEL:
            d["ST"] *= 1.0 + self.class_effect
            d["TP"] *= 1.0 + self.class_effect
        return np.array([d[g] for g in GENRES])


def _beat_template(bounds, waves, amp_scale, fs):
    """Waveform of one beat on relative sample offsets ``[-pad, len + pad)``."""
    pad = int(np.ceil(5 * max(w[1] for w in waves.values()) * fs))
    rel = np.arange(-pad, bounds[-1] + pad, dtype=np.float64)
    y = np.zeros_like(rel)
    for wave, anchor in WAVE_ANCHORS.items():
        amp, sigma = waves[wave]
        center = bounds[GENRES.index(anchor) + 1]
        y += amp * amp_scale[wave] * np.exp(-0.5 * ((rel - center) / (sigma * fs)) ** 2)
    return y, pad


def synthesize_ecg(params, label, seed=None, record_id=None):
    """Render one annotated record; identical inputs give identical outputs."""
    params.validate()
    if label not in LABELS:
        raise InvalidParams(f"unknown label {label!r}")
    seed = params.rng_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    fs = params.sample_rate
    n_samples = int(round(params.duration_s * fs))
    base = params.genre_durations(label) * (1.0 + params.rr_jitter * rng.standard_normal())
    base = np.maximum(base, 1e-3)
    mean_beat = int(round(base.sum() * fs))
    phase = int(rng.integers(0, mean_beat)) if params.random_phase else 0

    x = np.zeros(n_samples)
    beats = []
    start = -phase - mean_beat
    while start < n_samples:
        d = base
        if params.beat_jitter > 0:
            d = base * (1.0 + params.beat_jitter * rng.standard_normal(len(GENRES)))
            d = np.maximum(d, 1.0 / fs)
        bounds = np.concatenate([[0], np.round(np.cumsum(d) * fs).astype(int)])
        bounds = np.maximum.accumulate(bounds)
        if params.amplitude_jitter > 0:
            scale = 1.0 + params.amplitude_jitter * rng.standard_normal(len(WAVE_ANCHORS))
            amp_scale = dict(zip(WAVE_ANCHORS, scale))
        else:
            amp_scale = dict.fromkeys(WAVE_ANCHORS, 1.0)
        template, pad = _beat_template(bounds, params.waves, amp_scale, fs)
        lo, hi = start - pad, start - pad + len(template)
        a, b = max(lo, 0), min(hi, n_samples)
        if a < b:
            x[a:b] += template[a - lo:b - lo]
        if start >= 0 and start + bounds[-1] <= n_samples:
            beats.append({g: (int(start + bounds[i]), int(start + bounds[i + 1]))
                          for i, g in enumerate(GENRES)})
        start += int(bounds[-1])

    if params.noise_std > 0:
        x = x + params.noise_std * rng.standard_normal(n_samples)
    rid = record_id if record_id is not None else f"synth-{label}-{seed}"
    return EcgRecord(rid, fs, x, label, WaveAnnotation(beats, rid))


def _template_fractions(params=None):
    """Genre boundaries relative to the R peak, as fractions of the RR interval."""
    params = params or SyntheticParams()
    d = params.genre_durations(LABELS[0])
    bounds = np.concatenate([[0.0], np.cumsum(d)])
    r_peak = bounds[GENRES.index("R") + 1]
    return (bounds - r_peak) / bounds[-1]


def detect_r_peaks(samples, sample_rate, refractory_s=0.25):
    x = np.asarray(samples, dtype=np.float64)
    x = x - np.median(x)
    top = np.percentile(x, 99.5)
    if not np.isfinite(top) or top <= 0:
        return np.array([], dtype=int)
    peaks, _ = find_peaks(x, height=0.5 * top, distance=max(1, int(refractory_s * sample_rate)))
    return peaks


def annotate_waves(record):
    """Return the stored annotation, or estimate one from detected R peaks."""
    if record.annotation is not None:
        return record.annotation
    peaks = detect_r_peaks(record.samples, record.sample_rate)
    if len(peaks) == 0:
        raise NoBeatsDetected(f"no R-peak candidates in record {record.id!r}")
    fractions = _template_fractions()
    default_rr = SyntheticParams().rr_interval_s * record.sample_rate
    n = len(record.samples)
    beats = []
    for k, r in enumerate(peaks):
        if k + 1 < len(peaks):
            rr = peaks[k + 1] - r
        elif k > 0:
            rr = r - peaks[k - 1]
        else:
            rr = default_rr
        bounds = r + np.round(fractions * rr).astype(int)
        bounds = np.maximum.accumulate(bounds)
        if bounds[0] < 0 or bounds[-1] > n:
            continue
        beats.append({g: (int(bounds[i]), int(bounds[i + 1])) for i, g in enumerate(GENRES)})
    if not beats:
        raise NoBeatsDetected(f"no complete beat fits inside record {record.id!r}")
    return WaveAnnotation(beats, record.id)
