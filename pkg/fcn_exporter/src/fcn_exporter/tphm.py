"""TPHM v1 writer.

Format: magic bytes ``TPHM``, u32 little-endian width, u32 little-endian
height, then width x height IEEE-754 float32 little-endian values,
row-major, each in [0, 1]. Values are validated, never clamped: a writer
that needs clamping has a bug upstream.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"TPHM"


def write_tphm(values: np.ndarray, path: str | Path) -> None:
    if values.ndim != 2:
        raise ValueError(f"expected a 2d array, got shape {values.shape}")
    data = np.ascontiguousarray(values, dtype=np.float32)
    if not np.all(np.isfinite(data)):
        raise ValueError("heatmap contains non-finite values")
    if data.size and (data.min() < 0.0 or data.max() > 1.0):
        raise ValueError(
            f"heatmap values outside [0, 1]: min {data.min()}, max {data.max()}")
    h, w = data.shape
    header = MAGIC + struct.pack("<II", w, h)
    Path(path).write_bytes(header + data.astype("<f4").tobytes())
