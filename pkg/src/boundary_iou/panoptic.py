"""Panoptic Quality with a pluggable segment measure.

``measure="mask"`` gives the usual PQ; ``measure="boundary"`` swaps Mask IoU
for ``min(Mask IoU, Boundary IoU)`` both when matching segments and when
averaging IoU over true positives.

Void (id 0) follows the standard PQ protocol: ground-truth void pixels are
left out of every IoU, and an unmatched prediction lying more than half on
void is not counted as a false positive.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .mask import FrameMismatchError, boundary_region, pixel_distance

VOID = 0
OFFSET = 1 << 32


class MalformedMapError(ValueError):
    """A panoptic map and its segment list disagree."""


@dataclass(frozen=True)
class Segment:
    id: int
    category_id: int
    isthing: bool


@dataclass
class PanopticLabelMap:
    ids: np.ndarray
    segments: dict[int, Segment]

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.ids.ndim != 2 or 0 in self.ids.shape:
            raise MalformedMapError(f"id grid must be a non-empty 2-D array, got {self.ids.shape}")

    @property
    def shape(self):
        return self.ids.shape

    def validate(self, name: str = "map") -> None:
        present, _ = np.unique(self.ids, return_counts=True)
        present = set(present.tolist()) - {VOID}
        listed = set(self.segments)
        if VOID in listed:
            raise MalformedMapError(f"{name}: segment id 0 is reserved for void")
        orphans = present - listed
        if orphans:
            raise MalformedMapError(f"{name}: pixel ids {sorted(orphans)} have no segment entry")
        missing = listed - present
        if missing:
            raise MalformedMapError(f"{name}: segments {sorted(missing)} have no pixels")

    @classmethod
    def from_segments_info(cls, ids, segments_info, categories=None, name="map"):
        isthing_by_cat = {c["id"]: bool(c.get("isthing", True)) for c in (categories or [])}
        segments: dict[int, Segment] = {}
        for s in segments_info:
            sid = int(s["id"])
            if sid in segments:
                raise MalformedMapError(f"{name}: duplicate segment id {sid}")
            cat = int(s["category_id"])
            isthing = s.get("isthing", isthing_by_cat.get(cat, True))
            segments[sid] = Segment(sid, cat, bool(isthing))
        m = cls(np.asarray(ids), segments)
        m.validate(name)
        return m


@dataclass
class PqStat:
    iou: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "PqStat"):
        self.iou += other.iou
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    def values(self) -> dict:
        denom = self.tp + 0.5 * self.fp + 0.5 * self.fn
        sq = self.iou / self.tp if self.tp else 0.0
        rq = self.tp / denom if denom else 0.0
        return {"pq": sq * rq, "sq": sq, "rq": rq, "tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass
class PqReport:
    overall: dict
    things: dict
    stuff: dict
    per_category: dict[int, dict]

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "things": self.things,
            "stuff": self.stuff,
            "per_category": {str(k): v for k, v in sorted(self.per_category.items())},
        }


@dataclass
class SegmentMatches:
    """Result of matching one image: TP pairs with their IoU, plus leftovers."""

    tp: list[tuple[int, int, float]] = field(default_factory=list)
    fn: list[int] = field(default_factory=list)
    fp: list[int] = field(default_factory=list)


def _areas(ids: np.ndarray) -> dict[int, int]:
    u, c = np.unique(ids, return_counts=True)
    return dict(zip(u.tolist(), c.tolist()))


def _boundary_iou_void(g_mask, p_mask, void, d) -> float:
    bg = boundary_region(g_mask, d)
    bp = boundary_region(p_mask, d) & ~void
    union = np.count_nonzero(bg | bp)
    if union == 0:
        return 1.0
    return np.count_nonzero(bg & bp) / union


def match_segments(gt: PanopticLabelMap, pred: PanopticLabelMap, measure: str = "mask", d: int = 1) -> SegmentMatches:
    if gt.shape != pred.shape:
        raise FrameMismatchError(f"frame mismatch: {gt.shape} vs {pred.shape}")
    if measure not in ("mask", "boundary"):
        raise ValueError(f"measure must be 'mask' or 'boundary', got {measure!r}")
    g_ids, p_ids = gt.ids, pred.ids
    joint = g_ids * OFFSET + p_ids
    overlap = _areas(joint)
    g_area, p_area = _areas(g_ids), _areas(p_ids)
    void = g_ids == VOID

    out = SegmentMatches()
    g_matched, p_matched = set(), set()
    for key, inter in sorted(overlap.items()):
        g_id, p_id = divmod(key, OFFSET)
        if g_id == VOID or p_id == VOID:
            continue
        gs, ps = gt.segments[g_id], pred.segments[p_id]
        if gs.category_id != ps.category_id:
            continue
        union = p_area[p_id] + g_area[g_id] - inter - overlap.get(VOID * OFFSET + p_id, 0)
        iou = inter / union
        if iou <= 0.5:
            continue
        if measure == "boundary":
            iou = min(iou, _boundary_iou_void(g_ids == g_id, p_ids == p_id, void, d))
            if iou <= 0.5:
                continue
        out.tp.append((g_id, p_id, iou))
        g_matched.add(g_id)
        p_matched.add(p_id)

    out.fn = sorted(set(gt.segments) - g_matched)
    for p_id in sorted(set(pred.segments) - p_matched):
        if overlap.get(VOID * OFFSET + p_id, 0) / p_area[p_id] > 0.5:
            continue
        out.fp.append(p_id)
    return out


def accumulate(stats: dict[int, PqStat], matches: SegmentMatches, gt: PanopticLabelMap, pred: PanopticLabelMap) -> None:
    for g_id, _, iou in matches.tp:
        s = stats[gt.segments[g_id].category_id]
        s.tp += 1
        s.iou += iou
    for g_id in matches.fn:
        stats[gt.segments[g_id].category_id].fn += 1
    for p_id in matches.fp:
        stats[pred.segments[p_id].category_id].fp += 1


def _average(stats: dict[int, PqStat], cats) -> dict:
    vals = [stats[c].values() for c in cats if c in stats and (stats[c].tp + stats[c].fp + stats[c].fn) > 0]
    n = len(vals)
    if n == 0:
        return {"pq": 0.0, "sq": 0.0, "rq": 0.0, "n": 0}
    return {k: sum(v[k] for v in vals) / n for k in ("pq", "sq", "rq")} | {"n": n}


def compute_pq(stats: dict[int, PqStat], isthing: dict[int, bool]) -> PqReport:
    """Per-category PQ/SQ/RQ and their unweighted means.

    ``isthing`` maps category id to the thing/stuff flag; categories absent
    from it count as things.
    """
    cats = sorted(stats)
    per_cat = {c: stats[c].values() for c in cats if (stats[c].tp + stats[c].fp + stats[c].fn) > 0}
    return PqReport(
        overall=_average(stats, cats),
        things=_average(stats, [c for c in cats if isthing.get(c, True)]),
        stuff=_average(stats, [c for c in cats if not isthing.get(c, True)]),
        per_category=per_cat,
    )


def evaluate_maps(pairs, measure: str = "mask", dilation_ratio: float = 0.02, threads: int = 1):
    """Evaluate an iterable of ``(gt_map, pred_map)`` pairs.

    Returns ``(report, d_by_index)``.
    """
    pairs = list(pairs)

    def one(pair):
        gt, pred = pair
        d = pixel_distance(gt.shape[0], gt.shape[1], dilation_ratio)
        return match_segments(gt, pred, measure, d), d

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, pairs))
    else:
        results = [one(p) for p in pairs]

    stats: dict[int, PqStat] = defaultdict(PqStat)
    isthing: dict[int, bool] = {}
    for (gt, pred), (matches, _) in zip(pairs, results):
        accumulate(stats, matches, gt, pred)
        for seg in pred.segments.values():
            isthing.setdefault(seg.category_id, seg.isthing)
        for seg in gt.segments.values():
            isthing[seg.category_id] = seg.isthing
    return compute_pq(dict(stats), isthing), [d for _, d in results]


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def _load_png_ids(path: str) -> np.ndarray:
    from PIL import Image

    rgb = np.asarray(Image.open(path).convert("RGB"), dtype=np.int64)
    return rgb[..., 0] + 256 * rgb[..., 1] + 65536 * rgb[..., 2]


def load_panoptic_file(path: str) -> dict[int, PanopticLabelMap]:
    """Read a panoptic JSON file into ``{image_id: PanopticLabelMap}``."""
    with open(path) as fh:
        data = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    images = {int(im["id"]): im for im in data.get("images", [])}
    categories = data.get("categories", [])
    out: dict[int, PanopticLabelMap] = {}
    for ann in data["annotations"]:
        image_id = int(ann["image_id"])
        name = f"{path}: image {image_id}"
        if image_id in out:
            raise MalformedMapError(f"{name}: duplicate annotation")
        if "ids" in ann:
            ids = np.asarray(ann["ids"], dtype=np.int64)
        elif "file_name" in ann:
            ids = _load_png_ids(os.path.join(base, ann["file_name"]))
        else:
            raise MalformedMapError(f"{name}: annotation needs 'ids' or 'file_name'")
        im = images.get(image_id)
        if im is not None and ids.shape != (int(im["height"]), int(im["width"])):
            raise MalformedMapError(f"{name}: id grid {ids.shape} does not match image size")
        out[image_id] = PanopticLabelMap.from_segments_info(ids, ann["segments_info"], categories, name)
    return out


def map_to_annotation(image_id: int, labels: PanopticLabelMap) -> dict:
    return {
        "image_id": image_id,
        "ids": labels.ids.tolist(),
        "segments_info": [
            {"id": s.id, "category_id": s.category_id, "isthing": s.isthing}
            for s in sorted(labels.segments.values(), key=lambda s: s.id)
        ],
    }


def evaluate_panoptic(gt_file: str, pred_file: str, measure: str = "mask", dilation_ratio: float = 0.02, threads: int = 1):
    """End-to-end PQ on two panoptic files. Returns ``(report, {image_id: d})``."""
    gts = load_panoptic_file(gt_file)
    preds = load_panoptic_file(pred_file)
    unknown = set(preds) - set(gts)
    if unknown:
        raise MalformedMapError(f"{pred_file}: predictions for unknown images {sorted(unknown)}")
    image_ids = sorted(gts)
    pairs = []
    for i in image_ids:
        gt = gts[i]
        pred = preds.get(i) or PanopticLabelMap(np.zeros_like(gt.ids), {})
        pairs.append((gt, pred))
    report, ds = evaluate_maps(pairs, measure, dilation_ratio, threads)
    return report, dict(zip(image_ids, ds))
