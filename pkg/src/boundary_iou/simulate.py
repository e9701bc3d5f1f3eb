"""Pseudo-prediction generators.

Each generator perturbs a ground-truth mask or polygon in one controlled way.
Randomized generators take an :class:`RngStream` and are pure functions of
their inputs and the stream's seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mask import Polygon, as_mask, dilate, erode, rasterize_polygon
from .rng import RngStream

ERROR_KINDS = (
    "scale_dilation",
    "scale_erosion",
    "boundary_localization",
    "object_localization",
    "boundary_approximation",
    "inner_mask",
)
POLYGON_KINDS = frozenset({"boundary_localization", "boundary_approximation"})

# hole semi-axes as a fraction of the mask's bounding-box diagonal
HOLE_AXIS_RANGE = (0.02, 0.10)


class MissingPolygonError(ValueError):
    """A polygon-based error kind was requested for a mask-only object."""


@dataclass(frozen=True)
class ErrorSpec:
    kind: str
    severity: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise ValueError(f"unknown error kind {self.kind!r}; choose from {', '.join(ERROR_KINDS)}")
        if not self.severity >= 0:
            raise ValueError("severity must be >= 0")
        if self.kind == "inner_mask" and float(self.severity) != int(self.severity):
            raise ValueError("inner_mask severity is a hole count and must be an integer")

    def to_json(self) -> dict:
        return {"kind": self.kind, "severity": self.severity, "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "ErrorSpec":
        return cls(str(obj["kind"]), obj["severity"], int(obj.get("seed", 0)))


def scale_error(mask, radius: int, mode: str = "dilate") -> np.ndarray:
    if mode == "dilate":
        return dilate(mask, int(radius))
    if mode == "erode":
        return erode(mask, int(radius))
    raise ValueError(f"mode must be 'dilate' or 'erode', got {mode!r}")


def boundary_localization_error(poly: Polygon, std: float, rng: RngStream) -> Polygon:
    if std < 0:
        raise ValueError("std must be >= 0")
    if std == 0:
        return poly
    noise = np.array([rng.normal(0.0, std) for _ in range(poly.vertices.size)])
    return Polygon(poly.vertices + noise.reshape(poly.vertices.shape))


def _shift(m: np.ndarray, dy: int, dx: int) -> np.ndarray:
    h, w = m.shape
    out = np.zeros_like(m)
    if abs(dy) >= h or abs(dx) >= w:
        return out
    src = m[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    out[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
    return out


def shift_vector(offset: float, rng: RngStream) -> tuple[int, int]:
    """Integer ``(dy, dx)`` of length ~``offset`` in a uniform random direction."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return int(round(offset * math.sin(theta))), int(round(offset * math.cos(theta)))


def object_localization_error(mask, offset: float, rng: RngStream) -> np.ndarray:
    m = as_mask(mask)
    if offset < 0:
        raise ValueError("offset must be >= 0")
    if offset == 0:
        return m.copy()
    dy, dx = shift_vector(offset, rng)
    return _shift(m, dy, dx)


def _segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(*(points - a).T)
    t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(*(points - proj).T)


def _dp_chain(pts: np.ndarray, tol: float) -> list[int]:
    """Douglas-Peucker on an open chain; returns kept indices (endpoints included)."""
    keep = [0, len(pts) - 1]
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        dist = _segment_distances(pts[i + 1:j], pts[i], pts[j])
        k = int(np.argmax(dist))
        if dist[k] > tol:
            mid = i + 1 + k
            keep.append(mid)
            stack.append((i, mid))
            stack.append((mid, j))
    return sorted(set(keep))


def boundary_approximation_error(poly: Polygon, tolerance: float) -> Polygon:
    """Douglas-Peucker simplification of a closed outline.

    The ring is cut at its two mutually most distant vertices and each half
    is simplified as an open chain, so those two vertices always survive.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    v = poly.vertices
    n = v.shape[0]
    if n < 3:
        return poly
    diff = v[:, None, :] - v[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    a, b = np.unravel_index(int(np.argmax(d2)), d2.shape)
    a, b = (int(a), int(b)) if a < b else (int(b), int(a))
    first = np.arange(a, b + 1)
    second = np.concatenate([np.arange(b, n), np.arange(0, a + 1)])
    kept = {int(first[i]) for i in _dp_chain(v[first], tolerance)}
    kept |= {int(second[i]) for i in _dp_chain(v[second], tolerance)}
    return Polygon(v[sorted(kept)])


def _ellipse(h: int, w: int, cy: float, cx: float, ay: float, ax: float, angle: float) -> np.ndarray:
    r = math.ceil(max(ay, ax))
    y0, y1 = max(0, int(cy) - r - 1), min(h, int(cy) + r + 2)
    x0, x1 = max(0, int(cx) - r - 1), min(w, int(cx) + r + 2)
    out = np.zeros((h, w), dtype=bool)
    if y0 >= y1 or x0 >= x1:
        return out
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dy, dx = yy + 0.5 - cy, xx + 0.5 - cx
    c, s = math.cos(angle), math.sin(angle)
    u = c * dx + s * dy
    v = -s * dx + c * dy
    out[y0:y1, x0:x1] = (u / ax) ** 2 + (v / ay) ** 2 <= 1.0
    return out


def inner_mask_error(mask, holes: int, rng: RngStream) -> np.ndarray:
    """Punch ``holes`` random elliptical holes into the mask."""
    m = as_mask(mask)
    if holes < 0:
        raise ValueError("holes must be >= 0")
    out = m.copy()
    if holes == 0:
        return out
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        return out
    diag = math.hypot(ys.max() - ys.min() + 1, xs.max() - xs.min() + 1)
    lo, hi = HOLE_AXIS_RANGE
    h, w = m.shape
    for _ in range(int(holes)):
        i = rng.randbelow(ys.size)
        ay = max(0.5, rng.uniform(lo, hi) * diag)
        ax = max(0.5, rng.uniform(lo, hi) * diag)
        angle = rng.uniform(0.0, math.pi)
        out &= ~_ellipse(h, w, ys[i] + 0.5, xs[i] + 0.5, ay, ax, angle)
    return out


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with pixel-centre alignment and edge clamping.

    Output pixel ``i`` samples source coordinate ``(i + 0.5) * in / out - 0.5``.
    """
    a = np.asarray(arr, dtype=np.float64)
    return _interp_matrix(a.shape[0], out_h) @ a @ _interp_matrix(a.shape[1], out_w).T


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    w = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(w, (rows, i0), 1.0 - frac)
    np.add.at(w, (rows, i1), frac)
    return w


def cap_resolution_instance(mask, res: int = 28) -> np.ndarray:
    """Simulate a ``res x res`` mask head: crop, downscale, upscale, threshold."""
    m = as_mask(mask)
    if res < 1:
        raise ValueError("res must be >= 1")
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        return m.copy()
    r0, r1, c0, c1 = ys.min(), ys.max() + 1, xs.min(), xs.max() + 1
    crop = m[r0:r1, c0:c1].astype(np.float64)
    small = resize_bilinear(crop, res, res)
    back = resize_bilinear(small, crop.shape[0], crop.shape[1])
    out = np.zeros_like(m)
    out[r0:r1, c0:c1] = back >= 0.5
    return out


def cap_resolution_panoptic(labels, ratio: int):
    """Nearest-neighbour down- then up-scaling of a panoptic id map.

    Downscaled pixel ``i`` takes the source pixel at the centre of its
    ``ratio``-sized block. Segments that disappear are dropped.
    """
    from .panoptic import PanopticLabelMap

    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    ids = labels.ids
    if ratio == 1:
        return PanopticLabelMap(ids.copy(), dict(labels.segments))
    h, w = ids.shape
    sy = np.minimum(np.arange(0, h, ratio) + ratio // 2, h - 1)
    sx = np.minimum(np.arange(0, w, ratio) + ratio // 2, w - 1)
    small = ids[np.ix_(sy, sx)]
    up = np.repeat(np.repeat(small, ratio, axis=0), ratio, axis=1)[:h, :w]
    present = set(np.unique(up).tolist())
    segments = {sid: seg for sid, seg in labels.segments.items() if sid in present}
    return PanopticLabelMap(np.ascontiguousarray(up), segments)


def apply_error(spec: ErrorSpec, mask, polygons=None, rng: RngStream | None = None) -> np.ndarray:
    """Produce a pseudo-prediction mask for one object.

    ``polygons`` (a list of :class:`Polygon`) is required for the polygon
    kinds; ``rng`` defaults to a stream seeded with ``spec.seed``.
    """
    m = as_mask(mask)
    rng = rng or RngStream(spec.seed)
    sev = spec.severity
    if spec.kind == "scale_dilation":
        return scale_error(m, int(round(sev)), "dilate")
    if spec.kind == "scale_erosion":
        return scale_error(m, int(round(sev)), "erode")
    if spec.kind == "object_localization":
        return object_localization_error(m, sev, rng)
    if spec.kind == "inner_mask":
        return inner_mask_error(m, int(sev), rng)
    if not polygons:
        raise MissingPolygonError(f"error kind {spec.kind!r} needs polygon ground truth")
    h, w = m.shape
    out = np.zeros_like(m)
    for poly in polygons:
        if spec.kind == "boundary_localization":
            p = boundary_localization_error(poly, sev, rng)
        else:
            p = boundary_approximation_error(poly, sev)
        out |= rasterize_polygon(p, h, w)
    return out
