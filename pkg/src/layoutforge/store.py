"""Flat binary tensor files.

Format "LFT1": 16-byte header (magic ``LFT1`` then little-endian u32
channels, height, width) followed by C-order little-endian float32 data.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"LFT1"
_HEADER = struct.Struct("<4sIII")


def write_tensor(path: str | Path, tensor: np.ndarray) -> None:
    tensor = np.asarray(tensor)
    if tensor.ndim != 3:
        raise ValueError("tensor must be (channels, height, width)")
    c, h, w = tensor.shape
    data = np.ascontiguousarray(tensor, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, c, h, w))
        fh.write(data.tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated tensor file")
    magic, c, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * c * h * w
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return data.reshape(c, h, w).astype(float)
