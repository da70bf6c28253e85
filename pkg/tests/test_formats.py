import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from podlab.errors import SnapshotFileError
from podlab.formats import (
    VERSION,
    _fnv1a_python,
    fmt,
    fnv1a64,
    read_csv,
    read_snapshots,
    write_csv,
    write_manifest,
    write_snapshots,
)


@pytest.mark.parametrize("data,expected", [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
])
def test_fnv1a_known_values(data, expected):
    assert fnv1a64(data) == expected
    assert _fnv1a_python(data) == expected


@settings(max_examples=10, deadline=None)
@given(st.integers(4096, 20000), st.integers(0, 2**32 - 1))
def test_fnv1a_compiled_matches_reference(size, seed):
    # lengths above 4 KiB take the compiled path
    data = np.random.default_rng(seed).integers(0, 256, size, dtype=np.uint8).tobytes()
    assert fnv1a64(data) == _fnv1a_python(data)


def test_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    fields = rng.standard_normal((7, 31))
    fields[0, 0] = -0.0
    fields[1, 1] = np.nextafter(0, 1)
    path = write_snapshots(tmp_path / "t.snap", fields, "heat", 32, 1e-3, "trajectory", 1)
    sf = read_snapshots(path)
    assert sf.fields.tobytes() == fields.astype("<f8").tobytes()
    assert (sf.problem, sf.n_cells, sf.dt, sf.kind, sf.stride) == ("heat", 32, 1e-3, "trajectory", 1)
    head = path.read_bytes().split(b"\n\n", 1)[0].decode()
    assert head.splitlines()[0] == f"version={VERSION}"
    assert [ln.split("=")[0] for ln in head.splitlines()] == ["version", "problem", "n_cells", "dt", "count", "kind", "stride"]


def test_heat_file_payload_size(tmp_path, heat_traj):
    path = write_snapshots(tmp_path / "heat.snap", heat_traj.fields, "heat", 1024, 1e-3, "trajectory")
    raw = path.read_bytes()
    payload = raw[raw.find(b"\n\n") + 2 : -8]
    assert len(payload) == 1001 * 1023 * 8


def _rewrite_header(path, key, value):
    raw = path.read_bytes()
    head, body = raw.split(b"\n\n", 1)
    lines = [ln if not ln.startswith(key.encode() + b"=") else f"{key}={value}".encode() for ln in head.split(b"\n")]
    path.write_bytes(b"\n".join(lines) + b"\n\n" + body)


@pytest.fixture
def snap(tmp_path):
    return write_snapshots(tmp_path / "s.snap", np.ones((3, 7)), "burgers", 8, 0.5, "basis", 2)


def test_count_zero_rejected(snap):
    _rewrite_header(snap, "count", 0)
    with pytest.raises(SnapshotFileError, match="empty"):
        read_snapshots(snap)


def test_version_mismatch(snap):
    _rewrite_header(snap, "version", "podlab-snap v2")
    with pytest.raises(SnapshotFileError, match="version"):
        read_snapshots(snap)


def test_truncated_payload(snap):
    snap.write_bytes(snap.read_bytes()[:-20])
    with pytest.raises(SnapshotFileError, match="payload"):
        read_snapshots(snap)


def test_checksum_mismatch(snap):
    raw = bytearray(snap.read_bytes())
    raw[-20] ^= 0x01
    snap.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFileError, match="checksum"):
        read_snapshots(snap)


def test_missing_terminator_and_keys(tmp_path):
    p = tmp_path / "bad.snap"
    p.write_bytes(b"version=podlab-snap v1\nproblem=heat\n")
    with pytest.raises(SnapshotFileError, match="terminator"):
        read_snapshots(p)
    p.write_bytes(b"version=podlab-snap v1\n\n")
    with pytest.raises(SnapshotFileError, match="lacks"):
        read_snapshots(p)


def test_write_checks_width(tmp_path):
    with pytest.raises(SnapshotFileError):
        write_snapshots(tmp_path / "x.snap", np.ones((2, 5)), "heat", 8, 0.1, "trajectory")


def test_csv_formatting_is_fixed(tmp_path):
    assert fmt(3) == "3"
    assert fmt(np.int64(7)) == "7"
    assert fmt(0.1) == "1.000000000e-01"
    assert fmt(np.float64(1 / 3)) == "3.333333333e-01"
    p = write_csv(tmp_path / "a.csv", ["r", "x"], [[1, 0.5], [2, 2.5e-7]])
    assert p.read_text() == "r,x\n1,5.000000000e-01\n2,2.500000000e-07\n"
    assert read_csv(p) == [{"r": "1", "x": "5.000000000e-01"}, {"r": "2", "x": "2.500000000e-07"}]
    write_csv(tmp_path / "b.csv", ["r", "x"], [[1, 0.5], [2, 2.5e-7]])
    assert (tmp_path / "b.csv").read_bytes() == p.read_bytes()


def test_manifest_sorted(tmp_path):
    p = write_manifest(tmp_path / "m.json", {"b": 1, "a": [1, 2]})
    assert p.read_text().index('"a"') < p.read_text().index('"b"')
