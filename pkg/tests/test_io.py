import numpy as np
import pytest

from collocative.errors import DataError, EmptyDataset
from collocative.io import (
    ManifestRow, load_records, read_annotation, read_manifest, read_signal,
    write_annotation, write_manifest, write_signal,
)


def test_signal_round_trip(tmp_path, clean_record):
    p = tmp_path / "a.cecg"
    write_signal(p, clean_record.samples, 250)
    raw = p.read_bytes()
    assert raw[:4] == b"CECG" and int.from_bytes(raw[4:8], "little") == 250
    assert len(raw) == 8 + 4 * len(clean_record.samples)
    rate, x = read_signal(p)
    assert rate == 250
    np.testing.assert_array_equal(x, clean_record.samples.astype(np.float32))


def test_signal_rejects_garbage(tmp_path):
    p = tmp_path / "bad.cecg"
    p.write_bytes(b"NOPE1234")
    with pytest.raises(DataError, match="bad.cecg"):
        read_signal(p)
    p.write_bytes(b"CECG" + (10).to_bytes(4, "little") + b"\x00\x00")
    with pytest.raises(DataError):
        read_signal(p)


def test_annotation_round_trip(tmp_path, clean_record):
    p = tmp_path / "a.csv"
    write_annotation(p, clean_record.annotation)
    assert p.read_text().splitlines()[0] == "beat_index,genre,onset,offset"
    assert read_annotation(p, clean_record.id) == clean_record.annotation


def test_annotation_bad_row(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("beat_index,genre,onset,offset\n0,P,x,3\n")
    with pytest.raises(DataError, match="a.csv:2"):
        read_annotation(p)


def test_manifest_and_loading(tmp_path, clean_record):
    write_signal(tmp_path / "s.cecg", clean_record.samples, 250)
    write_annotation(tmp_path / "s.csv", clean_record.annotation)
    write_manifest(tmp_path / "m.csv", [
        ManifestRow("a", "eating", "s.cecg", "s.csv"),
        ManifestRow("b", "non_eating", "s.cecg"),
    ])
    rows = read_manifest(tmp_path / "m.csv")
    assert [r.id for r in rows] == ["a", "b"]
    assert rows[1].annotation_path is None
    recs = load_records(tmp_path / "m.csv")
    assert recs[0].annotation == clean_record.annotation and recs[1].annotation is None


def test_manifest_errors(tmp_path):
    (tmp_path / "empty.csv").write_text("# nothing\n")
    with pytest.raises(EmptyDataset):
        load_records(tmp_path / "empty.csv")
    (tmp_path / "m.csv").write_text("a,eating,missing.cecg\n")
    with pytest.raises(DataError, match="missing.cecg"):
        load_records(tmp_path / "m.csv")
    with pytest.raises(DataError):
        read_manifest(tmp_path / "nope.csv")
    (tmp_path / "short.csv").write_text("a,eating\n")
    with pytest.raises(DataError, match="short.csv:1"):
        read_manifest(tmp_path / "short.csv")
