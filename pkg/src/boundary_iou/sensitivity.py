"""Sensitivity analysis: sweep error severity or object size and summarize measures.

Each curve point is the mean and population standard deviation of one
measure over all pseudo-predictions sharing an error kind and severity (or
size bin). The pseudo-prediction for GT object ``i`` at severity index ``j``
draws from a stream seeded by ``derive_seed(seed, i, j)``, so a point never
depends on which other severities or objects are in the run.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .mask import Polygon, as_mask, pixel_distance, rasterize_polygons
from .measures import MEASURE_NAMES, MeasureConfig, evaluate_measure
from .rng import RngStream, derive_seed
from .simulate import POLYGON_KINDS, ErrorSpec, MissingPolygonError, apply_error

CSV_COLUMNS = ("error_kind", "measure", "axis", "x_value", "mean", "std", "n")


@dataclass
class GtObject:
    """A ground-truth object: its mask and, optionally, the polygons it came from."""

    mask: np.ndarray
    polygons: list[Polygon] | None = None

    def __post_init__(self):
        self.mask = as_mask(self.mask)

    @classmethod
    def from_polygons(cls, polygons, height: int, width: int) -> "GtObject":
        polygons = list(polygons)
        return cls(rasterize_polygons(polygons, height, width), polygons)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    mean: float
    std: float
    n: int


@dataclass
class SensitivityCurve:
    error_kind: str
    measure: str
    axis: str  # "severity" or "size"
    points: list[CurvePoint] = field(default_factory=list)


def _default_edges():
    return tuple(float((16 * k) ** 2) for k in range(0, 11))


@dataclass(frozen=True)
class AreaBinning:
    """Area bins ``(edges[i], edges[i + 1]]``; defaults step the side length by 16."""

    edges: tuple[float, ...] = field(default_factory=_default_edges)

    def __post_init__(self):
        e = tuple(float(x) for x in self.edges)
        if len(e) < 2 or any(b <= a for a, b in zip(e, e[1:])):
            raise ValueError("bin edges must be strictly increasing with at least two entries")
        object.__setattr__(self, "edges", e)

    def bin_index(self, area: float) -> int | None:
        e = self.edges
        if area <= e[0] or area > e[-1]:
            return None
        return int(np.searchsorted(e, area, side="left")) - 1

    @staticmethod
    def size_name(area: float) -> str:
        if area <= 32**2:
            return "S"
        if area <= 96**2:
            return "M"
        return "L"


def summarize(values) -> tuple[float, float, int]:
    """Mean and population standard deviation, via exactly-rounded sums."""
    vals = [float(v) for v in values]
    n = len(vals)
    mean = math.fsum(vals) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / n)
    return mean, std, n


def _evaluate_object(obj: GtObject, kind: str, severity: float, measures, d: int,
                     mcfg: MeasureConfig, seed: int, obj_index: int, sev_index: int):
    if kind in POLYGON_KINDS and not obj.polygons:
        raise MissingPolygonError(f"object {obj_index}: error kind {kind!r} needs polygon ground truth")
    stream = RngStream(derive_seed(seed, obj_index, sev_index))
    pred = apply_error(ErrorSpec(kind, severity), obj.mask, obj.polygons, stream)
    return [evaluate_measure(m, obj.mask, pred, d, mcfg) for m in measures]


def _run(jobs, threads: int):
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda job: _evaluate_object(*job), jobs))
    return [_evaluate_object(*job) for job in jobs]


def _check_measures(measures):
    bad = [m for m in measures if m not in MEASURE_NAMES]
    if bad:
        raise ValueError(f"unknown measures {bad}; choose from {', '.join(MEASURE_NAMES)}")


def run_severity_sweep(gts, kind: str, severities, measures=("mask_iou", "boundary_iou"),
                       d_ratio: float = 0.02, seed: int = 0, threads: int = 1) -> list[SensitivityCurve]:
    gts = list(gts)
    severities = list(severities)
    if not gts:
        raise ValueError("need at least one ground-truth object")
    if not severities:
        raise ValueError("need at least one severity")
    _check_measures(measures)
    mcfg = MeasureConfig(dilation_ratio=d_ratio)
    jobs = []
    for j, sev in enumerate(severities):
        for i, obj in enumerate(gts):
            d = pixel_distance(*obj.mask.shape, d_ratio)
            jobs.append((obj, kind, sev, measures, d, mcfg, seed, i, j))
    results = _run(jobs, threads)

    curves = [SensitivityCurve(kind, m, "severity") for m in measures]
    n = len(gts)
    for j, sev in enumerate(severities):
        block = results[j * n:(j + 1) * n]
        for k, curve in enumerate(curves):
            curve.points.append(CurvePoint(float(sev), *summarize(r[k] for r in block)))
    return curves


def run_size_sweep(gts, kind: str, severity: float, measures=("mask_iou", "boundary_iou"),
                   binning: AreaBinning | None = None, d_ratio: float = 0.02, seed: int = 0,
                   threads: int = 1) -> list[SensitivityCurve]:
    """One curve per measure over area bins; the x value is the bin's upper edge."""
    gts = list(gts)
    if severity < 0:
        raise ValueError("severity must be >= 0")
    _check_measures(measures)
    binning = binning or AreaBinning()
    mcfg = MeasureConfig(dilation_ratio=d_ratio)
    jobs, bins = [], []
    for i, obj in enumerate(gts):
        b = binning.bin_index(float(obj.mask.sum()))
        if b is None:
            continue
        d = pixel_distance(*obj.mask.shape, d_ratio)
        jobs.append((obj, kind, severity, measures, d, mcfg, seed, i, 0))
        bins.append(b)
    results = _run(jobs, threads)

    curves = [SensitivityCurve(kind, m, "size") for m in measures]
    for b in sorted(set(bins)):
        block = [r for r, bb in zip(results, bins) if bb == b]
        for k, curve in enumerate(curves):
            curve.points.append(CurvePoint(binning.edges[b + 1], *summarize(r[k] for r in block)))
    return curves


def curves_to_csv(curves) -> str:
    rows = []
    for c in curves:
        for p in c.points:
            rows.append((c.error_kind, c.measure, c.axis, p.x, p.mean, p.std, p.n))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for kind, measure, axis, x, mean, std, n in rows:
        w.writerow([kind, measure, axis, f"{x:.6f}", f"{mean:.6f}", f"{std:.6f}", n])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file and rename, so readers never see a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_curves_csv(curves, destination) -> None:
    """Write curves as CSV to a path or an open text stream."""
    text = curves_to_csv(curves)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        atomic_write(os.fspath(destination), text)


def read_curves_csv(source) -> list[SensitivityCurve]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    curves: dict[tuple, SensitivityCurve] = {}
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["error_kind"], row["measure"], row["axis"])
        if key not in curves:
            curves[key] = SensitivityCurve(*key)
        curves[key].points.append(
            CurvePoint(float(row["x_value"]), float(row["mean"]), float(row["std"]), int(row["n"]))
        )
    return list(curves.values())


def builtin_objects(seed: int = 0, height: int = 512, width: int = 512, n_blobs: int = 24) -> list[GtObject]:
    """Squares, discs and random blobs of many sizes, all polygon-backed."""
    from .shapes import blob_polygon, square_polygon

    objs = []
    cx, cy = width / 2.0, height / 2.0
    for side in range(16, 176, 16):
        objs.append(GtObject.from_polygons([square_polygon(cx, cy, side)], height, width))
    for radius in (8, 16, 32, 64, 96):
        n = max(16, int(2 * math.pi * radius / 2))
        t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        poly = Polygon(np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], axis=1))
        objs.append(GtObject.from_polygons([poly], height, width))
    rng = RngStream(seed)
    for i in range(n_blobs):
        radius = 8.0 * 1.13 ** i
        objs.append(GtObject.from_polygons([blob_polygon(rng.derive(i), cx, cy, radius)], height, width))
    return objs
