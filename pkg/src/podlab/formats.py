"""On-disk formats: the ``podlab-snap v1`` field file, CSV reports and run manifests.

Snapshot file layout::

    version=podlab-snap v1
    problem=heat
    n_cells=1024
    dt=0.001
    count=1001
    kind=trajectory
    stride=1
    <blank line>
    count * n_dofs little-endian float64 values, one field per row
    8-byte little-endian FNV-1a 64 checksum of the payload
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SnapshotFileError

VERSION = "podlab-snap v1"
HEADER_KEYS = ("version", "problem", "n_cells", "dt", "count", "kind", "stride")

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def _fnv1a_python(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK
    return h


try:
    import numba

    @numba.njit(cache=False)
    def _fnv1a_kernel(buf):
        h = numba.uint64(FNV_OFFSET)
        p = numba.uint64(FNV_PRIME)
        for i in range(buf.shape[0]):
            h = (h ^ numba.uint64(buf[i])) * p
        return h

    def fnv1a64(data: bytes) -> int:
        if len(data) < 4096:
            return _fnv1a_python(data)
        return int(_fnv1a_kernel(np.frombuffer(data, dtype=np.uint8)))

except ImportError:  # pragma: no cover
    fnv1a64 = _fnv1a_python


@dataclass
class SnapshotFile:
    fields: np.ndarray
    problem: str
    n_cells: int
    dt: float
    kind: str
    stride: int


def write_snapshots(path, fields, problem: str, n_cells: int, dt: float, kind: str, stride: int = 1) -> Path:
    fields = np.ascontiguousarray(np.atleast_2d(fields), dtype="<f8")
    if fields.shape[1] != n_cells - 1:
        raise SnapshotFileError(f"fields have {fields.shape[1]} dofs, expected {n_cells - 1}")
    header = {
        "version": VERSION,
        "problem": problem,
        "n_cells": str(int(n_cells)),
        "dt": repr(float(dt)),
        "count": str(fields.shape[0]),
        "kind": kind,
        "stride": str(int(stride)),
    }
    payload = fields.tobytes(order="C")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write("".join(f"{k}={header[k]}\n" for k in HEADER_KEYS).encode("ascii"))
        fh.write(b"\n")
        fh.write(payload)
        fh.write(np.uint64(fnv1a64(payload)).astype("<u8").tobytes())
    return path


def read_snapshots(path) -> SnapshotFile:
    raw = Path(path).read_bytes()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise SnapshotFileError(f"{path}: missing header terminator")
    header = {}
    for line in raw[:sep].decode("ascii", errors="replace").splitlines():
        key, eq, value = line.partition("=")
        if not eq:
            raise SnapshotFileError(f"{path}: malformed header line {line!r}")
        header[key.strip()] = value.strip()
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise SnapshotFileError(f"{path}: header lacks {', '.join(missing)}")
    if header["version"] != VERSION:
        raise SnapshotFileError(f"{path}: unsupported version {header['version']!r}")
    try:
        n_cells = int(header["n_cells"])
        count = int(header["count"])
        dt = float(header["dt"])
        stride = int(header["stride"])
    except ValueError as exc:
        raise SnapshotFileError(f"{path}: bad numeric header value ({exc})") from exc
    if count <= 0:
        raise SnapshotFileError(f"{path}: empty ensemble (count={count})")
    n_dofs = n_cells - 1
    body = raw[sep + 2 :]
    expected = count * n_dofs * 8
    if len(body) != expected + 8:
        raise SnapshotFileError(f"{path}: payload has {len(body) - 8} bytes, expected {expected}")
    payload, trailer = body[:expected], body[expected:]
    if int(np.frombuffer(trailer, dtype="<u8")[0]) != fnv1a64(payload):
        raise SnapshotFileError(f"{path}: checksum mismatch")
    fields = np.frombuffer(payload, dtype="<f8").reshape(count, n_dofs).astype(float)
    return SnapshotFile(fields, header["problem"], n_cells, dt, header["kind"], stride)


def fmt(value) -> str:
    """Fixed CSV float formatting: scientific, 10 significant digits."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9e}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path
