"""Dataset and coreset files.

Binary datasets: magic ``CSF1``, u64 ``n``, u32 ``d``, then ``n*d``
little-endian float64 values row-major. Binary coresets use magic ``CSW1``
followed by the same layout and a block of ``m`` float64 weights. CSV files
hold one point per row; a first row that does not parse as numbers is a
header. Coreset CSVs carry the weight as the last column.
"""

from __future__ import annotations

import csv
import os
import struct

import numpy as np

from .core import WeightedPointSet

DATA_MAGIC = b"CSF1"
CORESET_MAGIC = b"CSW1"
_HEADER = struct.Struct("<4sQI")


class DataFormatError(ValueError):
    """A dataset or coreset file could not be parsed."""


def _fmt(path, fmt):
    if fmt is not None:
        if fmt not in ("csv", "binary"):
            raise ValueError("format must be 'csv' or 'binary'")
        return fmt
    return "csv" if str(path).lower().endswith((".csv", ".txt")) else "binary"


def _write_binary(path, magic, X, weights=None):
    X = np.ascontiguousarray(X, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, X.shape[0], X.shape[1]))
        fh.write(X.tobytes())
        if weights is not None:
            fh.write(np.ascontiguousarray(weights, dtype="<f8").tobytes())


def _read_binary(path, magic, with_weights=False):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    got, n, d = _HEADER.unpack_from(raw)
    if got != magic:
        raise DataFormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    body = n * d * 8
    need = _HEADER.size + body
    if len(raw) < need:
        raise DataFormatError(
            f"{path}: truncated data at offset {len(raw)}, expected {need} bytes"
        )
    X = np.frombuffer(raw, dtype="<f8", count=n * d, offset=_HEADER.size).reshape(n, d).astype(np.float64)
    if not np.all(np.isfinite(X)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
        raise DataFormatError(f"{path}: non-finite value in row {bad}")
    if not with_weights:
        return X, None
    rest = (len(raw) - need) // 8
    if rest != n or (len(raw) - need) % 8:
        raise DataFormatError(f"{path}: weight block has {rest} entries, expected m={n}")
    w = np.frombuffer(raw, dtype="<f8", count=n, offset=need).astype(np.float64)
    return X, w


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _read_csv(path):
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not t.strip() for t in row):
                continue
            if lineno == 1 and not all(_is_number(t) for t in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
            try:
                vals = [float(t) for t in row]
            except ValueError as exc:
                raise DataFormatError(f"{path}: row {lineno}: {exc}") from None
            if not all(np.isfinite(vals)):
                raise DataFormatError(f"{path}: non-finite value in row {lineno}")
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def load_dataset(path, format: str | None = None) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if _fmt(path, format) == "csv":
        return _read_csv(path)
    return _read_binary(path, DATA_MAGIC)[0]


def write_dataset(data, path, format: str | None = None) -> None:
    X = np.asarray(data, dtype=np.float64)
    if _fmt(path, format) == "csv":
        np.savetxt(path, X, delimiter=",", fmt="%.17g")
    else:
        _write_binary(path, DATA_MAGIC, X)


def save_coreset(coreset: WeightedPointSet, path, format: str | None = None) -> None:
    if _fmt(path, format) == "csv":
        np.savetxt(path, np.column_stack([coreset.points, coreset.weights]), delimiter=",", fmt="%.17g")
    else:
        _write_binary(path, CORESET_MAGIC, coreset.points, coreset.weights)


def load_coreset(path, format: str | None = None) -> WeightedPointSet:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if _fmt(path, format) == "csv":
        A = _read_csv(path)
        if A.shape[1] < 2:
            raise DataFormatError(f"{path}: coreset CSV needs d+1 >= 2 columns")
        X, w = A[:, :-1], A[:, -1]
    else:
        X, w = _read_binary(path, CORESET_MAGIC, with_weights=True)
    try:
        return WeightedPointSet(X, w)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def iter_blocks(path, block_size: int, format: str | None = None):
    """Yield consecutive row blocks of a dataset file."""
    X = load_dataset(path, format)
    for i in range(0, X.shape[0], block_size):
        yield X[i:i + block_size]
