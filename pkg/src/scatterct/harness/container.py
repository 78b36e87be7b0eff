"""Minimal array container.

Layout: one line of UTF-8 JSON header terminated by ``\\n``, then the raw
array payload::

    {"byte_order": "little", "dtype": "f64", "meta": {...}, "shape": [257, 257]}\\n
    <prod(shape) * 8 bytes, little-endian IEEE-754 doubles, C order>
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["write_array", "read_array"]

_DTYPE = np.dtype("<f8")


def write_array(path, array, meta: dict | None = None) -> None:
    arr = np.ascontiguousarray(array, dtype=_DTYPE)
    header = {"byte_order": "little", "dtype": "f64", "shape": list(arr.shape)}
    if meta:
        header["meta"] = meta
    line = json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n"
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(line.encode("utf-8"))
            fh.write(arr.tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write array to {path}: {exc}") from exc


def read_array(path, with_meta: bool = False):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read array from {path}: {exc}") from exc
    end = raw.find(b"\n")
    if end < 0:
        raise ValueError(f"{path}: missing header line")
    header = json.loads(raw[:end].decode("utf-8"))
    if header.get("dtype") != "f64" or header.get("byte_order") != "little":
        raise ValueError(f"{path}: unsupported dtype/byte order in header {header}")
    shape = tuple(header["shape"])
    payload = raw[end + 1 :]
    if len(payload) != int(np.prod(shape)) * _DTYPE.itemsize:
        raise ValueError(f"{path}: payload size does not match shape {shape}")
    arr = np.frombuffer(payload, dtype=_DTYPE).reshape(shape).astype(np.float64)
    if with_meta:
        return arr, header.get("meta", {})
    return arr
