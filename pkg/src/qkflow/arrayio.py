"""Reader and writer for version 1.0 ``.npy`` files and simple CSV tables.

Only little-endian float64 arrays in C order are produced. The reader also
accepts ``<i8`` and ``|b1`` payloads (converted to float64) so label files
written by other tools load cleanly.
"""
from __future__ import annotations

import ast
import csv
import io
import os
import struct

import numpy as np

from .exceptions import DataFormatError

MAGIC = b"\x93NUMPY"
ALIGNMENT = 64
_READABLE_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8"), "|b1": np.dtype("|b1")}


def _header_bytes(shape: tuple[int, ...]) -> bytes:
    if len(shape) == 1:
        shape_text = f"({shape[0]},)"
    else:
        shape_text = "(" + ", ".join(str(s) for s in shape) + ")"
    text = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_text + ", }"
    # magic(6) + version(2) + length(2) + text + padding + newline is a multiple of 64
    unpadded = len(MAGIC) + 2 + 2 + len(text) + 1
    padding = (-unpadded) % ALIGNMENT
    return (text + " " * padding + "\n").encode("latin1")


def to_npy_bytes(array) -> bytes:
    arr = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    header = _header_bytes(arr.shape)
    if len(header) > 0xFFFF:
        raise DataFormatError("array rank too large for a version 1.0 header")
    return MAGIC + bytes([1, 0]) + struct.pack("<H", len(header)) + header + arr.tobytes(order="C")


def save_array(path, array) -> None:
    """Write ``array`` as a float64 ``.npy`` file (format version 1.0)."""
    data = to_npy_bytes(array)
    with open(path, "wb") as fh:
        fh.write(data)


def from_npy_bytes(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < 10:
        raise DataFormatError(f"{source}: file too short ({len(data)} bytes) for an npy header")
    if data[:6] != MAGIC:
        raise DataFormatError(f"{source}: bad magic bytes {data[:6]!r}, expected {MAGIC!r}")
    major, minor = data[6], data[7]
    if (major, minor) != (1, 0):
        raise DataFormatError(f"{source}: unsupported npy format version {major}.{minor}")
    (header_len,) = struct.unpack("<H", data[8:10])
    start = 10 + header_len
    if len(data) < start:
        raise DataFormatError(f"{source}: truncated header")
    try:
        header = ast.literal_eval(data[10:start].decode("latin1").strip())
        descr = header["descr"]
        fortran = header["fortran_order"]
        shape = tuple(int(s) for s in header["shape"])
    except (ValueError, SyntaxError, KeyError, TypeError) as exc:
        raise DataFormatError(f"{source}: malformed header ({exc})") from None
    if descr not in _READABLE_DTYPES:
        raise DataFormatError(f"{source}: unsupported dtype {descr!r}; expected '<f8'")
    if fortran:
        raise DataFormatError(f"{source}: Fortran-ordered arrays are not supported")
    dtype = _READABLE_DTYPES[descr]
    count = int(np.prod(shape)) if shape else 1
    expected = count * dtype.itemsize
    payload = data[start:]
    if len(payload) < expected:
        raise DataFormatError(
            f"{source}: truncated payload, expected {expected} bytes for shape {shape}, got {len(payload)}"
        )
    arr = np.frombuffer(payload[:expected], dtype=dtype).reshape(shape)
    return arr.astype(np.float64)


def load_array(path) -> np.ndarray:
    """Read an ``.npy`` file written by :func:`save_array` (or any v1.0 writer)."""
    with open(path, "rb") as fh:
        data = fh.read()
    return from_npy_bytes(data, os.fspath(path))


def load_csv(path, header: bool | None = None) -> np.ndarray:
    """Read a comma-separated numeric table.

    ``header=None`` auto-detects a single non-numeric first row.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataFormatError(f"{path}: empty CSV file")
    if header is None:
        try:
            [float(v) for v in rows[0]]
            header = False
        except ValueError:
            header = True
    body = rows[1:] if header else rows
    try:
        arr = np.array([[float(v) for v in row] for row in body], dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric CSV entry ({exc})") from None
    if arr.ndim != 2:
        raise DataFormatError(f"{path}: rows have inconsistent lengths")
    return arr


def save_csv(path, array, header: list[str] | None = None) -> None:
    arr = np.atleast_2d(np.asarray(array, dtype=float))
    if np.asarray(array).ndim == 1:
        arr = arr.T
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in arr:
        writer.writerow([repr(float(v)) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
