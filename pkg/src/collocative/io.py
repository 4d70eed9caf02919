"""On-disk formats: signal files, annotations, dataset manifests, tensor dumps."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, EmptyDataset, InvalidParams, ShapeMismatch
from .signal import GENRES, EcgRecord, WaveAnnotation
from .tensor import CollocativeTensor, RelationMatrix, ViewSpec

SIGNAL_MAGIC = b"CECG"
TENSOR_MAGIC = b"CTEN"


def write_signal(path, samples, sample_rate):
    data = np.asarray(samples, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(SIGNAL_MAGIC + struct.pack("<I", int(sample_rate)))
        fh.write(data.tobytes())


def read_signal(path):
    """``(sample_rate, samples)`` from a ``CECG`` file."""
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != SIGNAL_MAGIC:
        raise DataError(f"{path}: not a signal file")
    if (len(raw) - 8) % 4:
        raise DataError(f"{path}: truncated sample stream")
    (rate,) = struct.unpack_from("<I", raw, 4)
    return rate, np.frombuffer(raw, dtype="<f4", offset=8).astype(np.float64)


def write_annotation(path, annotation):
    lines = ["beat_index,genre,onset,offset"]
    for k, beat in enumerate(annotation.beats):
        for genre in GENRES:
            if genre in beat:
                on, off = beat[genre]
                lines.append(f"{k},{genre},{on},{off}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_annotation(path, record_id=None):
    beats = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("beat_index"):
            continue
        try:
            k, genre, on, off = line.split(",")
            beats.setdefault(int(k), {})[genre] = (int(on), int(off))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: bad annotation row {line!r}") from exc
    try:
        return WaveAnnotation([beats[k] for k in sorted(beats)], record_id)
    except InvalidParams as exc:
        raise DataError(f"{path}: {exc}") from exc


@dataclass
class ManifestRow:
    id: str
    label: str
    signal_path: Path
    annotation_path: Path | None = None


def read_manifest(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: manifest not found")
    base = path.parent
    rows = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("id,"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise DataError(f"{path}:{n}: expected id,label,signal_path[,annotation_path]")
        ann = base / parts[3] if len(parts) == 4 and parts[3] else None
        rows.append(ManifestRow(parts[0], parts[1], base / parts[2], ann))
    return rows


def write_manifest(path, rows):
    lines = []
    for r in rows:
        fields = [r.id, r.label, str(r.signal_path)]
        if r.annotation_path is not None:
            fields.append(str(r.annotation_path))
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def load_records(manifest_path):
    rows = read_manifest(manifest_path)
    if not rows:
        raise EmptyDataset(f"{manifest_path}: manifest lists no records")
    records = []
    for row in rows:
        if not row.signal_path.exists():
            raise DataError(f"{row.signal_path}: signal file not found (record {row.id})")
        rate, samples = read_signal(row.signal_path)
        ann = None
        if row.annotation_path is not None:
            if not row.annotation_path.exists():
                raise DataError(f"{row.annotation_path}: annotation not found (record {row.id})")
            ann = read_annotation(row.annotation_path, row.id)
        try:
            records.append(EcgRecord(row.id, rate, samples, row.label, ann))
        except DataError as exc:
            raise DataError(f"{row.signal_path}: {exc}") from exc
    return records


def tensor_bytes(tensor):
    """``CTEN`` header (magic, n, m, reserved) then channel-major float32."""
    head = TENSOR_MAGIC + struct.pack("<III", tensor.n, tensor.m, 0)
    body = np.stack([c.values for c in tensor.channels]).astype("<f4").tobytes()
    return head + body


def tensor_from_bytes(raw, views=None):
    if len(raw) < 16 or raw[:4] != TENSOR_MAGIC:
        raise DataError("not a tensor dump")
    n, m, _ = struct.unpack_from("<III", raw, 4)
    if len(raw) != 16 + 4 * n * n * m:
        raise ShapeMismatch("tensor dump size does not match its header")
    values = np.frombuffer(raw, dtype="<f4", offset=16).reshape(m, n, n).astype(np.float64)
    views = views or [ViewSpec("euclidean")] * m
    return CollocativeTensor([RelationMatrix(values[k], views[k]) for k in range(m)])
