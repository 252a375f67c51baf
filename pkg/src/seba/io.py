"""Matrix and sidecar file formats.

Two matrix formats are understood:

* CSV, one matrix row per line, comma separated, no header;
* ``SEBA1`` binary: the 6 magic bytes ``b"SEBA1\\0"``, little-endian ``u64``
  rows and cols, then ``rows * cols`` little-endian ``f64`` values in
  column-major order.

Sidecars are ``key=value`` text files, one pair per line, written in sorted
key order so that reruns are byte-identical.
"""
from __future__ import annotations

import os
import struct

import numpy as np

__all__ = [
    "MAGIC",
    "read_matrix",
    "write_matrix",
    "read_seba1",
    "write_seba1",
    "read_csv_matrix",
    "write_csv_matrix",
    "read_kv",
    "write_kv",
    "write_csv_table",
    "read_csv_table",
    "format_float",
]

MAGIC = b"SEBA1\x00"
_HEADER = struct.Struct("<6sQQ")


def format_float(x):
    """Shortest repr that round-trips a float64."""
    return repr(float(x))


def _check_finite(A, path):
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{path}: matrix contains NaN or Inf")
    return A


def write_seba1(path, A):
    A = np.asarray(A, dtype="<f8")
    if A.ndim == 1:
        A = A[:, None]
    _check_finite(A, path)
    rows, cols = A.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(np.asfortranarray(A).tobytes(order="F"))


def read_seba1(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size or blob[:6] != MAGIC:
        raise ValueError(f"{path}: not a SEBA1 file")
    _, rows, cols = _HEADER.unpack_from(blob)
    body = blob[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ValueError(
            f"{path}: expected {rows}x{cols} doubles, found {len(body)} bytes of data"
        )
    A = np.frombuffer(body, dtype="<f8").reshape((rows, cols), order="F")
    return _check_finite(np.array(A, dtype=float), path)


def write_csv_matrix(path, A):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    _check_finite(A, path)
    with open(path, "w", newline="\n") as fh:
        for row in A:
            fh.write(",".join(format_float(x) for x in row))
            fh.write("\n")


def read_csv_matrix(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a numeric CSV row") from None
    if not rows:
        raise ValueError(f"{path}: empty matrix")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged rows")
    return _check_finite(np.array(rows, dtype=float), path)


def _is_seba1(path):
    with open(path, "rb") as fh:
        return fh.read(6) == MAGIC


def read_matrix(path):
    """Read a matrix, detecting the SEBA1 magic and falling back to CSV."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    if _is_seba1(path):
        return read_seba1(path)
    return read_csv_matrix(path)


def write_matrix(path, A):
    """Write SEBA1 for ``.seba1`` paths and CSV otherwise."""
    path = os.fspath(path)
    if path.endswith(".seba1"):
        write_seba1(path, A)
    else:
        write_csv_matrix(path, A)


def _kv_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_kv_value(x) for x in v)
    return str(v)


def write_kv(path, mapping):
    with open(path, "w", newline="\n") as fh:
        for key in sorted(mapping):
            value = _kv_value(mapping[key])
            if "\n" in value:
                raise ValueError(f"value for {key!r} spans lines")
            fh.write(f"{key}={value}\n")


def read_kv(path):
    """Parse a ``key=value`` file into a dict of strings; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_csv_table(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                format_float(x) if isinstance(x, (float, np.floating)) else str(x)
                for x in row
            ))
            fh.write("\n")


def read_csv_table(path):
    """Read a headed CSV written by :func:`write_csv_table` into column arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = [line.strip().split(",") for line in fh if line.strip()]
    cols = {}
    for i, name in enumerate(header):
        vals = [row[i] for row in data]
        for conv in (int, float, str):
            try:
                cols[name] = np.array([conv(v) for v in vals])
                break
            except ValueError:
                continue
    return cols
