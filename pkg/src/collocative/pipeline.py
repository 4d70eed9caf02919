"""End-to-end experiment: ingest, tensors, cross-validated training, saliency,
decoding, ranking and tree building, all writing into one output directory.

Every stage reads what it needs from disk (the manifest or an earlier stage's
files), so running the stages one by one gives the same files as
:func:`run_experiment`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as cio
from .cag import estimate_period
from .config import RunConfig, derive_seed, dump_config
from .decoding import membership_matrix, pairwise_rating, unary_rating
from .errors import CollocativeError, DataError, ShapeMismatch, StageError
from .evaluation import CrossValidation, compute_metrics, kfold_indices
from .evidence import (
    AttributeRanking,
    AttributeTable,
    aggregate_ratings,
    attribute_name,
    parse_attribute,
    rank_attributes,
    select_attributes,
)
from .network import Checkpoint, load_checkpoint, save_checkpoint, train
from .saliency import SaliencyMap, collocative_saliency
from .signal import GENRES, LABELS, annotate_waves, label_index, normalize, segment
from .svg import heatmap_svg, tree_svg
from .tensor import (
    CellStandardizer,
    ChannelScaler,
    regularized_inverse_covariance,
    relation_matrix,
)

log = logging.getLogger("collocative")

CHUNK = 128


@contextmanager
def stage(name):
    """Attach the stage name to library errors raised inside the block."""
    try:
        yield
    except StageError:
        raise
    except (CollocativeError, FloatingPointError) as exc:
        raise StageError(name, exc) from exc


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        path.write_text(data)
    else:
        path.write_bytes(data)
    return path


def _read_csv(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: not found (run the earlier stage first)")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------- data


@dataclass
class Dataset:
    records: list
    annotations: list
    labels: np.ndarray
    series: list  # SegmentSeries of the normalized records

    @property
    def ids(self):
        return [r.id for r in self.records]

    def __len__(self):
        return len(self.records)


def ingest(cfg):
    """Load, normalize, annotate and segment every record of the manifest."""
    records = cio.load_records(cfg.require_manifest())
    seen = set()
    for r in records:
        if r.id in seen:
            raise DataError(f"duplicate record id {r.id!r} in {cfg.manifest}")
        seen.add(r.id)
    annotations = [annotate_waves(r) for r in records]
    series = [segment(normalize(r), cfg.segments) for r in records]
    labels = np.array([label_index(r.label) for r in records], dtype=int)
    return Dataset(records, annotations, labels, series)


class TensorCache:
    """Relation matrices keyed by ``(record id, n, view, normalization stats)``.

    Only the Mahalanobis view depends on fitted statistics; entries for stale
    statistics are dropped when new ones arrive so memory stays bounded.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._store = {}
        self._stats = None
        self.hits = 0
        self.misses = 0

    @staticmethod
    def stats_key(cov_inv):
        if cov_inv is None:
            return "-"
        return hashlib.sha256(np.ascontiguousarray(cov_inv, dtype="<f8").tobytes()).hexdigest()[:16]

    def channel(self, series, view, cov_inv=None):
        stats = self.stats_key(cov_inv) if view.metric == "mahalanobis" else "-"
        if stats != "-" and stats != self._stats:
            self._store = {k: v for k, v in self._store.items() if k[3] == "-"}
            self._stats = stats
        key = (series.record_id, series.n, view.name, stats)
        hit = self._store.get(key)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        stats_cov = cov_inv if view.metric == "mahalanobis" else None
        values = relation_matrix(series, view, stats_cov).values.astype(self.dtype)
        self._store[key] = values
        return values

    def tensors(self, dataset, indices, views, cov_inv=None):
        n = dataset.series[0].n if len(dataset) else 0
        out = np.empty((len(indices), n, n, len(views)), dtype=self.dtype)
        for row, i in enumerate(indices):
            for c, view in enumerate(views):
                out[row, :, :, c] = self.channel(dataset.series[i], view, cov_inv)
        return out


@dataclass
class Preprocessing:
    """Fold-level statistics: Mahalanobis covariance, channel min-max, per-cell z-score."""

    cov_inv: np.ndarray | None
    scaler: ChannelScaler
    standardizer: CellStandardizer

    @classmethod
    def fit(cls, cfg, dataset, train_idx, cache):
        cov_inv = None
        if any(v.metric == "mahalanobis" for v in cfg.views):
            lengths = {dataset.series[i].segment_length for i in train_idx}
            if len(lengths) != 1:
                raise ShapeMismatch("Mahalanobis view needs records of equal length")
            cov_inv = regularized_inverse_covariance(
                np.concatenate([dataset.series[i].segments for i in train_idx]))
        raw = cache.tensors(dataset, train_idx, cfg.views, cov_inv)
        scaler = ChannelScaler().fit(raw)
        standardizer = _fit_standardizer(raw, scaler)
        return cls(cov_inv, scaler, standardizer)

    def apply(self, raw, dtype=np.float32):
        out = np.empty(raw.shape, dtype=dtype)
        for s in range(0, len(raw), CHUNK):
            part = self.scaler.transform(raw[s:s + CHUNK])
            out[s:s + CHUNK] = self.standardizer.transform(part)
        return out

    def to_arrays(self):
        arrays = {
            "prep.lo": self.scaler.lo, "prep.hi": self.scaler.hi,
            "prep.mean": self.standardizer.mean, "prep.std": self.standardizer.std,
        }
        if self.cov_inv is not None:
            arrays["prep.cov_inv"] = self.cov_inv
        return arrays

    @classmethod
    def from_arrays(cls, arrays):
        try:
            return cls(arrays.get("prep.cov_inv"),
                       ChannelScaler(arrays["prep.lo"], arrays["prep.hi"]),
                       CellStandardizer(arrays["prep.mean"], arrays["prep.std"]))
        except KeyError as exc:
            raise DataError(f"checkpoint lacks preprocessing block {exc}") from exc


def _fit_standardizer(raw, scaler):
    # two chunked passes keep the float64 working set small
    total = None
    for s in range(0, len(raw), CHUNK):
        part = scaler.transform(raw[s:s + CHUNK])
        total = part.sum(axis=0) if total is None else total + part.sum(axis=0)
    mean = total / len(raw)
    sq = np.zeros_like(mean)
    for s in range(0, len(raw), CHUNK):
        sq += ((scaler.transform(raw[s:s + CHUNK]) - mean) ** 2).sum(axis=0)
    std = np.sqrt(sq / len(raw))
    return CellStandardizer(mean, np.where(std > 1e-12, std, 1.0))


def initial_period(cfg, dataset, train_idx):
    """Configured CAG period, or beats per window estimated from training signals."""
    if cfg.cag_period is not None:
        return float(cfg.cag_period)
    length = min(len(dataset.records[i].samples) for i in train_idx)
    signals = np.stack([normalize(dataset.records[i]).samples[:length] for i in train_idx])
    est = estimate_period(signals)
    return 12.0 if est is None else float(est)


# ----------------------------------------------------------------------- run header


def _input_files(cfg):
    files = [cfg.require_manifest()]
    for row in cio.read_manifest(cfg.manifest):
        files.append(row.signal_path)
        if row.annotation_path is not None:
            files.append(row.annotation_path)
    return files


def write_run_header(cfg):
    """``config.ini`` plus ``MANIFEST.lock`` (sha256 of every input file)."""
    files = _input_files(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "config.ini", dump_config(cfg))
    base = cfg.manifest.parent.resolve()
    lines = [f"# seed {cfg.seed}"]
    for f in files:
        digest = hashlib.sha256(Path(f).read_bytes()).hexdigest()
        try:
            name = Path(f).resolve().relative_to(base)
        except ValueError:
            name = Path(f).resolve()
        lines.append(f"{digest}  {name}")
    _write(out / "MANIFEST.lock", "\n".join(lines) + "\n")


# ---------------------------------------------------------------------- training


def fold_path(cfg, fold):
    return Path(cfg.out_dir) / "checkpoints" / f"fold_{fold:02d}.cckp"


def stage_train(cfg, dataset=None, cache=None):
    """Train one model per cross-validation fold (and optionally on all records)."""
    with stage("train"):
        dataset = dataset or ingest(cfg)
        cache = cache or TensorCache(cfg.dtype)
        folds = kfold_indices(dataset.labels, cfg.folds, cfg.seed)
        everything = np.arange(len(dataset))
        paths = []
        jobs = [(f, np.setdiff1d(everything, test), test) for f, test in enumerate(folds)]
        if cfg.train_final:
            jobs.append((None, everything, np.array([], dtype=int)))
        for fold, train_idx, test_idx in jobs:
            tag = "final" if fold is None else f"fold {fold}"
            prep = Preprocessing.fit(cfg, dataset, train_idx, cache)
            x = prep.apply(cache.tensors(dataset, train_idx, cfg.views, prep.cov_inv), cfg.dtype)
            period = initial_period(cfg, dataset, train_idx)
            seed_path = (3,) if fold is None else (1, fold)
            mcfg = cfg.model_config(derive_seed(cfg.seed, *seed_path), period)
            ckpt = train(x, dataset.labels[train_idx], mcfg,
                         log=lambda e, l, tag=tag: log.debug("%s epoch %d loss %.4f", tag, e, l))
            del x
            ckpt.seed = cfg.seed
            ckpt.extra = {
                "fold": fold,
                "folds": cfg.folds,
                "root_seed": cfg.seed,
                "views": [v.name for v in cfg.views],
                "initial_period": period,
                "test_ids": [dataset.records[i].id for i in test_idx],
            }
            ckpt.arrays = prep.to_arrays()
            path = fold_path(cfg, fold) if fold is not None else Path(cfg.out_dir) / "checkpoints" / "final.cckp"
            _write(path, save_checkpoint(ckpt))
            paths.append(path)
            log.info("%s: trained on %d records, final loss %.4f", tag, len(train_idx),
                     ckpt.loss_history[-1])
        return paths


def load_fold(cfg, fold):
    path = fold_path(cfg, fold)
    if not path.exists():
        raise DataError(f"{path}: checkpoint missing (run `train` first)")
    ckpt = load_checkpoint(path.read_bytes())
    if ckpt.extra.get("root_seed") != cfg.seed or ckpt.extra.get("folds") != cfg.folds:
        raise DataError(f"{path}: checkpoint was trained with a different seed or fold count")
    return ckpt


def _test_inputs(cfg, dataset, ckpt, cache):
    index = {rid: i for i, rid in enumerate(dataset.ids)}
    try:
        test_idx = np.array([index[rid] for rid in ckpt.extra["test_ids"]], dtype=int)
    except KeyError as exc:
        raise DataError(f"checkpoint refers to record {exc} missing from the manifest") from exc
    prep = Preprocessing.from_arrays(ckpt.arrays)
    raw = cache.tensors(dataset, test_idx, cfg.views, prep.cov_inv)
    return test_idx, prep.apply(raw, ckpt.model.dtype)


def stage_eval(cfg, dataset=None, cache=None):
    """Score every fold checkpoint on its held-out records; write ``metrics.csv``."""
    with stage("eval"):
        dataset = dataset or ingest(cfg)
        cache = cache or TensorCache(cfg.dtype)
        folds, metrics = [], []
        predictions = np.full(len(dataset), -1)
        fold_of = np.full(len(dataset), -1)
        for f in range(cfg.folds):
            ckpt = load_fold(cfg, f)
            test_idx, x = _test_inputs(cfg, dataset, ckpt, cache)
            pred = ckpt.model.predict(x)
            predictions[test_idx] = pred
            fold_of[test_idx] = f
            folds.append(test_idx)
            metrics.append(compute_metrics(pred, dataset.labels[test_idx]))
        cv = CrossValidation(metrics, folds, predictions)
        out = Path(cfg.out_dir)
        _write(out / "metrics.csv", cv.to_csv(cfg.seed))
        rows = [(rid, LABELS[dataset.labels[i]], int(fold_of[i]), LABELS[predictions[i]])
                for i, rid in enumerate(dataset.ids)]
        _write(out / "predictions.csv", _csv_text(["id", "label", "fold", "prediction"], rows))
        log.info("eval: mean accuracy %.2f%% over %d folds", cv.mean("accuracy"), cfg.folds)
        return cv


# ---------------------------------------------------------------------- saliency


def stage_saliency(cfg, dataset=None, cache=None):
    """Per-record fused saliency for the true class; class means over correct records."""
    with stage("saliency"):
        dataset = dataset or ingest(cfg)
        cache = cache or TensorCache(cfg.dtype)
        n = cfg.segments
        maps = np.zeros((len(dataset), n, n))
        pred = np.full(len(dataset), -1)
        fold_of = np.full(len(dataset), -1)
        for f in range(cfg.folds):
            ckpt = load_fold(cfg, f)
            test_idx, x = _test_inputs(cfg, dataset, ckpt, cache)
            for s in range(0, len(test_idx), 32):
                idx = test_idx[s:s + 32]
                xb = x[s:s + 32]
                pred[idx] = ckpt.model.predict(xb)
                for i, sal in zip(idx, collocative_saliency(ckpt.model, xb, dataset.labels[idx])):
                    maps[i] = sal.values
            fold_of[test_idx] = f
        out = Path(cfg.out_dir) / "saliency"
        out.mkdir(parents=True, exist_ok=True)
        buf = io.BytesIO()
        np.save(buf, maps)
        _write(out / "maps.npy", buf.getvalue())
        correct = pred == dataset.labels
        rows = [(rid, LABELS[dataset.labels[i]], int(fold_of[i]), LABELS[pred[i]], int(correct[i]))
                for i, rid in enumerate(dataset.ids)]
        _write(out / "records.csv", _csv_text(["id", "label", "fold", "prediction", "correct"], rows))
        class_maps = {}
        for c, label in enumerate(LABELS):
            members = np.nonzero(correct & (dataset.labels == c))[0]
            if len(members) == 0:
                log.warning("saliency: no correctly classified %s records", label)
                continue
            mean = maps[members].mean(axis=0)
            class_maps[label] = SaliencyMap(mean, c)
            _write(out / f"class_{label}.csv",
                   _csv_text([f"s{j}" for j in range(n)], [[f"{v:.6g}" for v in row] for row in mean]))
            _write(out / f"class_{label}.svg",
                   heatmap_svg(mean, title=f"{label}: mean over {len(members)} correct records"))
        return class_maps


def load_saliency(cfg, dataset):
    out = Path(cfg.out_dir) / "saliency"
    rows = _read_csv(out / "records.csv")
    if [r["id"] for r in rows] != dataset.ids:
        raise DataError(f"{out / 'records.csv'}: record list differs from the manifest")
    maps = np.load(out / "maps.npy")
    correct = np.array([r["correct"] == "1" for r in rows])
    return maps, correct


# ---------------------------------------------------------------------- decoding


def stage_decode(cfg, dataset=None):
    """Genre ratings averaged over correctly classified records."""
    with stage("decode"):
        dataset = dataset or ingest(cfg)
        maps, correct = load_saliency(cfg, dataset)
        ratings = []
        for i in np.nonzero(correct)[0]:
            m = membership_matrix(dataset.annotations[i], dataset.series[i])
            ratings.append((unary_rating(maps[i], m), pairwise_rating(maps[i], m)))
        unary, pairs = aggregate_ratings(ratings)
        out = Path(cfg.out_dir) / "decode"
        _write(out / "unary.csv", _csv_text(["genre", "rating"],
                                            [(g, repr(float(v))) for g, v in zip(GENRES, unary)]))
        _write(out / "pairs.csv", _csv_text(["genre", *GENRES],
                                            [(g, *(repr(float(v)) for v in row))
                                             for g, row in zip(GENRES, pairs)]))
        return unary, pairs


def load_decoded(cfg):
    out = Path(cfg.out_dir) / "decode"
    u_rows = _read_csv(out / "unary.csv")
    p_rows = _read_csv(out / "pairs.csv")
    unary = np.array([float(r["rating"]) for r in u_rows])
    pairs = np.array([[float(r[g]) for g in GENRES] for r in p_rows])
    if unary.shape != (len(GENRES),) or pairs.shape != (len(GENRES),) * 2:
        raise ShapeMismatch(f"{out}: decoded ratings do not cover {len(GENRES)} genres")
    return unary, pairs


def stage_rank(cfg):
    with stage("rank"):
        ranking = rank_attributes(*load_decoded(cfg))
        rows = [("unary", k + 1, g, repr(s)) for k, (g, s) in enumerate(ranking.unary)]
        rows += [("comparative", k + 1, attribute_name(p), repr(s))
                 for k, (p, s) in enumerate(ranking.comparative)]
        _write(Path(cfg.out_dir) / "rankings.csv", _csv_text(["kind", "rank", "attribute", "score"], rows))
        return ranking


def load_ranking(cfg):
    rows = _read_csv(Path(cfg.out_dir) / "rankings.csv")
    unary = [(r["attribute"], float(r["score"])) for r in rows if r["kind"] == "unary"]
    comp = [(parse_attribute(r["attribute"]), float(r["score"])) for r in rows if r["kind"] == "comparative"]
    return AttributeRanking(unary, comp)


# ------------------------------------------------------------------------- trees


def stage_trees(cfg, dataset=None):
    """Attribute selection plus tree and forest artifacts for both ranking lists."""
    with stage("trees"):
        dataset = dataset or ingest(cfg)
        ranking = load_ranking(cfg)
        table = AttributeTable(dataset.records, dataset.annotations)
        out = Path(cfg.out_dir) / "trees"
        results = {}
        summary = []
        for kind, ranked in (("unary", ranking.unary_attributes()),
                             ("comparative", ranking.comparative_attributes())):
            t_max = min(cfg.t_max, len(ranked))
            common = dict(evaluator=cfg.evaluator, seed=derive_seed(cfg.seed, 2),
                          heldout=cfg.heldout)
            tree_sel = select_attributes(ranked, t_max, cfg.h_max, table, dataset.labels,
                                         builder="tree", **common)
            forest_sel = select_attributes(ranked, t_max, cfg.h_max, table, dataset.labels,
                                           builder="forest", rounds=cfg.forest_rounds, **common)
            tree_sel.model.class_names = LABELS
            forest_sel.model.class_names = LABELS
            _write(out / f"{kind}_tree.txt", tree_sel.model.to_text())
            _write(out / f"{kind}_tree.graph", tree_sel.model.to_graph())
            _write(out / f"{kind}_tree.svg", tree_svg(tree_sel.model))
            _write(out / f"{kind}_forest.txt", forest_sel.model.to_text())
            for label, sel in (("tree", tree_sel), ("forest", forest_sel)):
                summary.append((kind, label, len(sel.attributes), sel.height,
                                f"{sel.score:.4f}", ";".join(attribute_name(a) for a in sel.attributes)))
            results[kind] = {"tree": tree_sel, "forest": forest_sel}
        _write(out / "selection.csv",
               _csv_text(["ranking", "model", "t", "h", cfg.evaluator, "attributes"], summary))
        return results


# ------------------------------------------------------------------------ report


def stage_report(cfg):
    """Plain-text summary assembled from the stage outputs."""
    with stage("report"):
        out = Path(cfg.out_dir)
        lines = [f"seed: {cfg.seed}", ""]
        metrics = _read_csv(out / "metrics.csv")
        for row in metrics:
            if row["fold"] in ("mean", "std"):
                lines.append(f"{row['fold']:>5}: " + "  ".join(
                    f"{k}={row[k]}" for k in ("accuracy", "f1", "recall", "precision", "tpr", "tnr")))
        lines += ["", "learned gates per fold (alpha, beta, gamma, period) for each block:"]
        for f in range(cfg.folds):
            gates = load_fold(cfg, f).model.params["cag"]
            cells = "  ".join("(" + ", ".join(f"{v:.3f}" for v in g) + ")" for g in gates)
            lines.append(f"  fold {f}: {cells}")
        ranking_path = out / "rankings.csv"
        if ranking_path.exists():
            ranking = load_ranking(cfg)
            lines += ["", "top unary: " + ", ".join(g for g, _ in ranking.unary[:5]),
                      "top comparative: " + ", ".join(attribute_name(p) for p, _ in ranking.comparative[:5])]
        sel_path = out / "trees" / "selection.csv"
        if sel_path.exists():
            lines += ["", "selected evidence models:"]
            for r in _read_csv(sel_path):
                lines.append(f"  {r['ranking']:<11} {r['model']:<6} t={r['t']} h={r['h']} "
                             f"{cfg.evaluator}={r[cfg.evaluator]}  [{r['attributes']}]")
        text = "\n".join(lines) + "\n"
        _write(out / "report.txt", text)
        return text


# ---------------------------------------------------------------------- together


@dataclass
class ExperimentResult:
    out_dir: Path
    checkpoints: list
    cv: CrossValidation
    class_saliency: dict
    ranking: AttributeRanking
    selections: dict = field(default_factory=dict)

    def artifact_paths(self):
        out = Path(self.out_dir)
        return sorted(p for p in out.rglob("*") if p.is_file())


def run_experiment(cfg: RunConfig):
    """Every stage in order on one shared dataset and tensor cache."""
    with stage("ingest"):
        dataset = ingest(cfg)
        write_run_header(cfg)
    cache = TensorCache(cfg.dtype)
    checkpoints = stage_train(cfg, dataset, cache)
    cv = stage_eval(cfg, dataset, cache)
    class_maps = stage_saliency(cfg, dataset, cache)
    stage_decode(cfg, dataset)
    ranking = stage_rank(cfg)
    selections = stage_trees(cfg, dataset)
    stage_report(cfg)
    return ExperimentResult(Path(cfg.out_dir), checkpoints, cv, class_maps, ranking, selections)


def reload_checkpoint(path) -> Checkpoint:
    return load_checkpoint(Path(path).read_bytes())


def synthesize_dataset(cfg, count=None, directory=None):
    """Write ``count`` annotated synthetic records (alternating labels) plus a manifest."""
    from .signal import synthesize_ecg

    count = cfg.synth_count if count is None else count
    directory = Path(directory) if directory is not None else Path(cfg.out_dir) / "data"
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(count):
        label = LABELS[i % len(LABELS)]
        rid = f"rec{i:05d}"
        record = synthesize_ecg(cfg.synth, label, seed=derive_seed(cfg.seed, 0, i), record_id=rid)
        cio.write_signal(directory / f"{rid}.cecg", record.samples, record.sample_rate)
        cio.write_annotation(directory / f"{rid}.csv", record.annotation)
        rows.append(cio.ManifestRow(rid, label, Path(f"{rid}.cecg"), Path(f"{rid}.csv")))
    manifest = directory / "manifest.csv"
    cio.write_manifest(manifest, rows)
    return manifest
