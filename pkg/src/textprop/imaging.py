"""Raster types, bounding-box geometry, heatmap I/O and integral-image statistics.

Boxes use the half-open convention [x0, x1) x [y0, y1): a box's area is
(x1 - x0) * (y1 - y0) pixels and two boxes sharing only an edge do not
intersect.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

TPHM_MAGIC = b"TPHM"


class HeatmapFormatError(ValueError):
    """Raised for a malformed heatmap file (bad magic, truncated header/body)."""


class HeatmapRangeError(ValueError):
    """Raised when a float heatmap contains values outside [0, 1]."""


class BoxBoundsError(ValueError):
    """Raised when a box reaches outside the raster it is applied to."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box, half-open on the right/bottom edges."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box ({self.x0},{self.y0},{self.x1},{self.y1})")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def union(self, other: "BoundingBox") -> "BoundingBox":
        return BoundingBox(
            min(self.x0, other.x0), min(self.y0, other.y0),
            max(self.x1, other.x1), max(self.y1, other.y1),
        )

    def contains(self, other: "BoundingBox") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def clip(self, width: int, height: int) -> "BoundingBox | None":
        """Intersect with [0,width)x[0,height); None if nothing remains."""
        x0, y0 = max(self.x0, 0), max(self.y0, 0)
        x1, y1 = min(self.x1, width), min(self.y1, height)
        if x0 >= x1 or y0 >= y1:
            return None
        return BoundingBox(x0, y0, x1, y1)


class GrayImage:
    """Single-channel 8-bit image. `data` is a read-only (h, w) uint8 array."""

    def __init__(self, data: np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty (h, w) array, got shape {arr.shape}")
        arr.flags.writeable = False
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def inverted(self) -> "GrayImage":
        return GrayImage(255 - self.data)


class ColorImage:
    """RGB 8-bit image. `data` is a read-only (h, w, 3) uint8 array."""

    def __init__(self, data: np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty (h, w, 3) array, got shape {arr.shape}")
        arr.flags.writeable = False
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def to_gray(self) -> GrayImage:
        """ITU-R BT.601 luma, rounded to nearest integer."""
        rgb = self.data.astype(np.float64)
        luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
        return GrayImage(np.rint(luma).astype(np.uint8))


class Heatmap:
    """Per-pixel text probability in [0, 1]. `data` is read-only (h, w) float32."""

    def __init__(self, data: np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty (h, w) array, got shape {arr.shape}")
        if not bool(np.all((arr >= 0.0) & (arr <= 1.0))):
            raise HeatmapRangeError("heatmap values must lie in [0, 1]")
        arr.flags.writeable = False
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


class IntegralImage:
    """Summed-area table of a heatmap.

    entry(i, j) = sum of heatmap values over [0, i) x [0, j) (x by y), stored
    as a read-only (h+1, w+1) float64 array indexed [j, i]. Accumulation uses
    Kahan compensation along each axis so box sums stay accurate for very
    large rasters.
    """

    def __init__(self, table: np.ndarray, width: int, height: int):
        self.table = table
        self.width = width
        self.height = height

    def box_sum(self, b: BoundingBox) -> float:
        if b.x0 < 0 or b.y0 < 0 or b.x1 > self.width or b.y1 > self.height:
            raise BoxBoundsError(
                f"box ({b.x0},{b.y0},{b.x1},{b.y1}) outside {self.width}x{self.height} extent")
        t = self.table
        return float(t[b.y1, b.x1] - t[b.y0, b.x1] - t[b.y1, b.x0] + t[b.y0, b.x0])

    def run_sum(self, y: int, x0: int, x1: int) -> float:
        """Sum over the single-row run [x0, x1) at row y."""
        if y < 0 or y >= self.height or x0 < 0 or x1 > self.width or x0 >= x1:
            raise BoxBoundsError(f"run y={y} [{x0},{x1}) outside extent")
        t = self.table
        return float(t[y + 1, x1] - t[y, x1] - t[y + 1, x0] + t[y, x0])


def _kahan_cumsum(arr: np.ndarray, axis: int) -> np.ndarray:
    """Compensated running sum along one axis (loop over that axis only)."""
    out = np.empty_like(arr)
    moved = np.moveaxis(arr, axis, 0)
    out_m = np.moveaxis(out, axis, 0)
    acc = np.zeros(moved.shape[1:], dtype=np.float64)
    comp = np.zeros_like(acc)
    for k in range(moved.shape[0]):
        y = moved[k] - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        out_m[k] = acc
    return out


def build_integral(h: Heatmap) -> IntegralImage:
    """Build the summed-area table of a heatmap."""
    table = np.zeros((h.height + 1, h.width + 1), dtype=np.float64)
    csum = _kahan_cumsum(h.data.astype(np.float64), axis=1)
    csum = _kahan_cumsum(csum, axis=0)
    table[1:, 1:] = csum
    table.flags.writeable = False
    return IntegralImage(table, h.width, h.height)


def box_mean(ii: IntegralImage, b: BoundingBox) -> float:
    """Mean heatmap value inside `b`, in O(1) via the summed-area table."""
    return ii.box_sum(b) / b.area


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union with pixel-count (half-open) semantics."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def load_heatmap(path) -> Heatmap:
    """Read a heatmap file.

    Two formats are accepted:
      * TPHM v1: magic b"TPHM", u32le width, u32le height, then
        width*height float32le values, row-major, each in [0, 1].
      * Binary PGM ("P5", maxval 255): 8-bit values mapped v/255.
    """
    raw = Path(path).read_bytes()
    if raw[:4] == TPHM_MAGIC:
        return _parse_tphm(raw)
    if raw[:2] == b"P5":
        return _parse_pgm(raw)
    raise HeatmapFormatError(f"{path}: not a TPHM v1 or binary PGM file")


def save_heatmap(h: Heatmap, path) -> None:
    """Write a heatmap in the TPHM v1 binary format."""
    with open(path, "wb") as f:
        f.write(TPHM_MAGIC)
        f.write(struct.pack("<II", h.width, h.height))
        f.write(h.data.astype("<f4", copy=False).tobytes())


def _parse_tphm(raw: bytes) -> Heatmap:
    if len(raw) < 12:
        raise HeatmapFormatError("TPHM header truncated")
    width, height = struct.unpack_from("<II", raw, 4)
    if width < 1 or height < 1:
        raise HeatmapFormatError(f"TPHM dimensions {width}x{height} invalid")
    expected = 12 + 4 * width * height
    if len(raw) != expected:
        raise HeatmapFormatError(
            f"TPHM body has {len(raw) - 12} bytes, expected {expected - 12}")
    data = np.frombuffer(raw, dtype="<f4", count=width * height, offset=12)
    data = data.reshape(height, width)
    if not bool(np.all((data >= 0.0) & (data <= 1.0))):
        raise HeatmapRangeError("TPHM values outside [0, 1]")
    return Heatmap(data)


def _parse_pgm(raw: bytes) -> Heatmap:
    # Header: "P5", whitespace-separated width height maxval, '#' comments
    # allowed, a single whitespace byte before the raster.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        token = raw[start:pos]
        if not token.isdigit():
            raise HeatmapFormatError(f"bad PGM header token {token!r}")
        fields.append(int(token))
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise HeatmapFormatError("PGM header not terminated")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise HeatmapFormatError(f"PGM dimensions {width}x{height} invalid")
    if maxval != 255:
        raise HeatmapFormatError(f"PGM maxval {maxval} unsupported (need 255)")
    if len(raw) - pos != width * height:
        raise HeatmapFormatError(
            f"PGM raster has {len(raw) - pos} bytes, expected {width * height}")
    data = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    return Heatmap(data.reshape(height, width).astype(np.float32) / np.float32(255.0))


def load_image(path) -> ColorImage:
    """Load a PNG/PGM/PPM image as RGB."""
    with Image.open(path) as im:
        return ColorImage(np.asarray(im.convert("RGB")))


def save_image_png(img: ColorImage, path) -> None:
    Image.fromarray(np.asarray(img.data)).save(path, format="PNG")
