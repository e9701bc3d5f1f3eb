"""Binary masks, their encodings, and exact square-window morphology.

A binary mask is a 2-D ``numpy`` array of ``bool``. Every measure in the
package consumes masks in that form; the run-length and polygon encodings
below exist only to get masks in and out of files.

Distances are Chebyshev (3x3 structuring element) and anything outside the
frame counts as background, so an object touching the image edge has a
boundary along that edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class MalformedEncodingError(ValueError):
    """An RLE or polygon record cannot be decoded."""


class FrameMismatchError(ValueError):
    """Two masks that should share a frame have different shapes."""


def as_mask(mask) -> np.ndarray:
    """Coerce ``mask`` to a 2-D boolean array with a non-empty frame."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mask frame must be non-empty, got shape {arr.shape}")
    if arr.dtype != np.bool_:
        arr = arr.astype(bool)
    return arr


def check_same_frame(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise FrameMismatchError(f"frame mismatch: {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# Run-length encoding (COCO uncompressed form)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RleMask:
    """Column-major run lengths; the first run counts background pixels."""

    height: int
    width: int
    counts: tuple[int, ...]

    def to_json(self) -> dict:
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_json(cls, obj: dict) -> "RleMask":
        try:
            h, w = obj["size"]
            counts = obj["counts"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedEncodingError(f"bad RLE record: {exc!r}") from None
        if isinstance(counts, str):
            raise MalformedEncodingError("compressed string RLE counts are not supported")
        return cls(int(h), int(w), tuple(int(c) for c in counts))


def decode_rle(rle: RleMask) -> np.ndarray:
    h, w = rle.height, rle.width
    if h < 1 or w < 1:
        raise MalformedEncodingError(f"invalid RLE frame {h}x{w}")
    counts = np.asarray(rle.counts, dtype=np.int64)
    if counts.size and counts.min() < 0:
        raise MalformedEncodingError("negative run length")
    total = int(counts.sum())
    if total != h * w:
        raise MalformedEncodingError(f"run lengths sum to {total}, expected {h * w}")
    values = np.zeros(counts.size, dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return flat.reshape((w, h)).T.copy()


def encode_rle(mask) -> RleMask:
    m = as_mask(mask)
    h, w = m.shape
    flat = m.T.reshape(-1)
    # indices where the value changes, plus both ends
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return RleMask(h, w, tuple(int(r) for r in runs))


# ---------------------------------------------------------------------------
# Polygons
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polygon:
    """Closed outline in continuous pixel units, ``vertices[:, 0]`` is x.

    Simplification may collapse an outline to two vertices; such polygons
    are allowed and rasterize to nothing. Parsing from files requires at
    least three.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise MalformedEncodingError(f"polygon vertices must be (n, 2), got {v.shape}")
        if v.shape[0] < 2:
            raise MalformedEncodingError("polygon needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise MalformedEncodingError("polygon has non-finite coordinates")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Polygon) and np.array_equal(self.vertices, other.vertices)

    def to_flat(self) -> list[float]:
        return [float(c) for c in self.vertices.reshape(-1)]

    @classmethod
    def from_flat(cls, coords: Sequence[float]) -> "Polygon":
        if len(coords) % 2 or len(coords) < 6:
            raise MalformedEncodingError(
                f"flat polygon needs an even number (>= 6) of coordinates, got {len(coords)}"
            )
        return cls(np.asarray(coords, dtype=np.float64).reshape(-1, 2))


def rasterize_polygon(poly: Polygon, height: int, width: int) -> np.ndarray:
    """Even-odd fill sampled at pixel centres.

    Pixel ``(r, c)`` is inside when the centre ``(c + 0.5, r + 0.5)`` has an
    odd number of edge crossings at or to its left on its scanline. An edge
    spans the half-open interval ``[y_min, y_max)``, so a centre lying on a
    left edge is inside and one on a right edge is outside.
    """
    out = np.zeros((height, width), dtype=bool)
    v = poly.vertices
    if v.shape[0] < 3:
        return out
    x0, y0 = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    keep = y0 != y1
    x0, y0, x1, y1 = x0[keep], y0[keep], x1[keep], y1[keep]
    if x0.size == 0:
        return out

    # orient every edge upward so an edge and its reverse cross at the same x
    flip = y0 > y1
    x0, x1 = np.where(flip, x1, x0), np.where(flip, x0, x1)
    y0, y1 = np.where(flip, y1, y0), np.where(flip, y0, y1)

    ys = np.arange(height) + 0.5
    # rows x edges
    hit = (ys[:, None] >= y0[None, :]) & (ys[:, None] < y1[None, :])
    rows, edges = np.nonzero(hit)
    if rows.size == 0:
        return out
    xs = x0[edges] + (ys[rows] - y0[edges]) * (x1[edges] - x0[edges]) / (y1[edges] - y0[edges])
    cols = np.clip(np.ceil(xs - 0.5), 0, width).astype(np.int64)

    toggles = np.zeros((height, width + 1), dtype=np.int64)
    np.add.at(toggles, (rows, cols), 1)
    out[:] = (np.cumsum(toggles[:, :width], axis=1) & 1).astype(bool)
    return out


def rasterize_polygons(polys: Iterable[Polygon], height: int, width: int) -> np.ndarray:
    """Union of several outlines, as in COCO multi-part segmentations."""
    out = np.zeros((height, width), dtype=bool)
    for p in polys:
        out |= rasterize_polygon(p, height, width)
    return out


def decode_segmentation(seg, height: int, width: int) -> np.ndarray:
    """Decode an RLE dict or a list of flat polygons into a mask."""
    if isinstance(seg, dict):
        rle = RleMask.from_json(seg)
        if (rle.height, rle.width) != (height, width):
            raise MalformedEncodingError(
                f"RLE size {rle.height}x{rle.width} does not match frame {height}x{width}"
            )
        return decode_rle(rle)
    if isinstance(seg, list):
        if seg and not isinstance(seg[0], (list, tuple)):
            seg = [seg]
        return rasterize_polygons((Polygon.from_flat(p) for p in seg), height, width)
    raise MalformedEncodingError(f"unsupported segmentation type {type(seg).__name__}")


# ---------------------------------------------------------------------------
# Morphology
# ---------------------------------------------------------------------------


def _window_sums(m: np.ndarray, k: int, axis: int) -> np.ndarray:
    """Count of true pixels in the 2k+1 window along ``axis`` (zero-padded)."""
    pad = [(0, 0), (0, 0)]
    pad[axis] = (k + 1, k)
    c = np.cumsum(np.pad(m, pad).astype(np.int32), axis=axis)
    n = m.shape[axis]
    if axis == 0:
        return c[2 * k + 1:] - c[:n]
    return c[:, 2 * k + 1:] - c[:, :n]


def _window_all(m: np.ndarray, k: int, axis: int) -> np.ndarray:
    """True where all of the 2k+1 neighbours along ``axis`` are true."""
    return _window_sums(m, k, axis) == 2 * k + 1


def _window_any(m: np.ndarray, k: int, axis: int) -> np.ndarray:
    return _window_sums(m, k, axis) > 0


def _bbox(m: np.ndarray):
    rows = np.flatnonzero(m.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(m.any(axis=0))
    return rows[0], rows[-1] + 1, cols[0], cols[-1] + 1


def erode(mask, iterations: int) -> np.ndarray:
    """Erode by a (2k+1)x(2k+1) square; out-of-frame pixels are background.

    Equivalent to ``iterations`` passes of 3x3 erosion, computed in one
    separable pass so the cost does not grow with ``iterations``. Only the
    mask's bounding box is processed.
    """
    m = as_mask(mask)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return m.copy()
    out = np.zeros_like(m)
    box = _bbox(m)
    if box is None:
        return out
    r0, r1, c0, c1 = box
    crop = m[r0:r1, c0:c1]
    k = min(int(iterations), max(crop.shape))
    out[r0:r1, c0:c1] = _window_all(_window_all(crop, k, 0), k, 1)
    return out


def dilate(mask, iterations: int) -> np.ndarray:
    """Dilate by a (2k+1)x(2k+1) square, clipped to the frame."""
    m = as_mask(mask)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return m.copy()
    out = np.zeros_like(m)
    box = _bbox(m)
    if box is None:
        return out
    h, w = m.shape
    k = min(int(iterations), max(h, w))
    r0, r1 = max(0, box[0] - k), min(h, box[1] + k)
    c0, c1 = max(0, box[2] - k), min(w, box[3] + k)
    out[r0:r1, c0:c1] = _window_any(_window_any(m[r0:r1, c0:c1], k, 0), k, 1)
    return out


def boundary_region(mask, d: int) -> np.ndarray:
    """Mask pixels within Chebyshev distance ``d`` of the background.

    This is ``mask & ~erode(mask, d)``.
    """
    m = as_mask(mask)
    if d < 1:
        raise ValueError("d must be >= 1")
    return m & ~erode(m, d)


def contour(mask) -> np.ndarray:
    """Mask pixels with at least one background 8-neighbour.

    The result is an indicator grid over the same frame (the contour pixel
    set); use ``np.argwhere`` for explicit coordinates.
    """
    return boundary_region(mask, 1)


def band_region(mask, d: int) -> np.ndarray:
    """Pixels within distance ``d`` of the mask/background interface, both sides."""
    m = as_mask(mask)
    if d < 1:
        raise ValueError("d must be >= 1")
    return dilate(m, d) & ~erode(m, d)


def pixel_distance(height: int, width: int, ratio: float) -> int:
    """Boundary width in pixels for a fraction of the image diagonal."""
    if ratio <= 0:
        raise ValueError("ratio must be > 0")
    d = math.floor(ratio * math.hypot(height, width) + 0.5)
    return max(1, int(d))
