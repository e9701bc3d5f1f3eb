"""COCO-style average precision for instance segmentation.

The pairwise measure is pluggable: ``iou_measure="mask"`` reproduces Mask
AP, ``"boundary"`` uses ``min(Mask IoU, Boundary IoU)`` and gives Boundary
AP. Matching and accumulation follow the COCO protocol: greedy matching in
score order, crowd regions as ignore areas, 101-point interpolated precision.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .mask import MalformedEncodingError, boundary_region, decode_segmentation, pixel_distance

AREA_RANGES = {
    "all": (0.0, float("inf")),
    "small": (0.0, 32.0**2),
    "medium": (32.0**2, 96.0**2),
    "large": (96.0**2, float("inf")),
}


class ReferentialIntegrityError(ValueError):
    """A detection refers to an image or category absent from the GT file."""


class MalformedAnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class ApConfig:
    iou_measure: str = "mask"
    dilation_ratio: float = 0.02
    iou_thresholds: tuple[float, ...] = tuple(np.round(np.linspace(0.5, 0.95, 10), 2).tolist())
    recall_points: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 1.0, 101), 2).tolist())
    max_detections: int = 100

    def __post_init__(self):
        if self.iou_measure not in ("mask", "boundary"):
            raise ValueError(f"iou_measure must be 'mask' or 'boundary', got {self.iou_measure!r}")
        t = self.iou_thresholds
        if not t or any(not 0 < x <= 1 for x in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("iou_thresholds must be strictly increasing in (0, 1]")
        if self.dilation_ratio <= 0:
            raise ValueError("dilation_ratio must be > 0")


@dataclass
class Instance:
    """A decoded GT annotation or detection."""

    mask: np.ndarray
    area: float
    score: float = 1.0
    iscrowd: bool = False
    id: int | None = None


@dataclass
class ApReport:
    ap: float | None
    ap50: float | None
    ap75: float | None
    ap_s: float | None
    ap_m: float | None
    ap_l: float | None
    per_category: dict[int, dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "ap_s": self.ap_s,
            "ap_m": self.ap_m,
            "ap_l": self.ap_l,
            "per_category": {str(k): v for k, v in sorted(self.per_category.items())},
        }


def in_area_range(area: float, rng: tuple[float, float]) -> bool:
    lo, hi = rng
    if lo == 0.0:
        return area <= hi
    return lo < area <= hi


def pairwise_iou_matrix(gts: list[Instance], dets: list[Instance], cfg: ApConfig, d: int = 1) -> np.ndarray:
    """``(len(dets), len(gts))`` matrix of the configured measure.

    Crowd GT columns hold intersection over detection area.
    """
    if not gts or not dets:
        return np.zeros((len(dets), len(gts)))
    g = np.stack([x.mask.reshape(-1) for x in gts]).astype(np.float64)
    p = np.stack([x.mask.reshape(-1) for x in dets]).astype(np.float64)
    inter = p @ g.T
    ga, pa = g.sum(axis=1), p.sum(axis=1)
    union = pa[:, None] + ga[None, :] - inter
    crowd = np.array([x.iscrowd for x in gts])
    with np.errstate(divide="ignore", invalid="ignore"):
        iou = np.where(union > 0, inter / union, 0.0)
        crowd_iou = np.where(pa[:, None] > 0, inter / pa[:, None], 0.0)
    if cfg.iou_measure == "boundary":
        gb = np.stack([boundary_region(x.mask, d).reshape(-1) for x in gts]).astype(np.float64)
        pb = np.stack([boundary_region(x.mask, d).reshape(-1) for x in dets]).astype(np.float64)
        binter = pb @ gb.T
        bunion = pb.sum(axis=1)[:, None] + gb.sum(axis=1)[None, :] - binter
        with np.errstate(divide="ignore", invalid="ignore"):
            biou = np.where(bunion > 0, binter / bunion, 0.0)
        iou = np.minimum(iou, biou)
    iou = np.where(crowd[None, :], crowd_iou, iou)
    return iou.astype(np.float64)


@dataclass
class ImageMatch:
    """Per (image, category, area range) matching outcome for all thresholds."""

    scores: np.ndarray  # (D,)
    matched: np.ndarray  # (T, D) bool
    ignored: np.ndarray  # (T, D) bool
    num_gt: int  # non-ignored GT count


def match_image_category(gts: list[Instance], dets: list[Instance], ious: np.ndarray, area_range, cfg: ApConfig) -> ImageMatch:
    """Greedy COCO matching.

    ``dets`` and the rows of ``ious`` must already be in descending score
    order and truncated to ``cfg.max_detections``.
    """
    gt_ignore = np.array([g.iscrowd or not in_area_range(g.area, area_range) for g in gts], dtype=bool)
    order = np.argsort(gt_ignore, kind="stable")
    gt_ignore = gt_ignore[order]
    crowd = np.array([gts[i].iscrowd for i in order], dtype=bool)
    ious = ious[:, order] if len(gts) else ious

    T, D, G = len(cfg.iou_thresholds), len(dets), len(gts)
    matched = np.zeros((T, D), dtype=bool)
    ignored = np.zeros((T, D), dtype=bool)
    for ti, t in enumerate(cfg.iou_thresholds):
        gt_taken = np.zeros(G, dtype=bool)
        for di in range(D):
            best = min(t, 1 - 1e-10)
            m = -1
            for gi in range(G):
                if gt_taken[gi] and not crowd[gi]:
                    continue
                # non-ignored GT sort first; stop once a real match exists
                if m > -1 and not gt_ignore[m] and gt_ignore[gi]:
                    break
                if ious[di, gi] < best:
                    continue
                best = ious[di, gi]
                m = gi
            if m == -1:
                continue
            ignored[ti, di] = gt_ignore[m]
            matched[ti, di] = True
            gt_taken[m] = True
    out_of_range = np.array([not in_area_range(x.area, area_range) for x in dets], dtype=bool)
    ignored |= ~matched & out_of_range[None, :]
    return ImageMatch(
        scores=np.array([x.score for x in dets], dtype=np.float64),
        matched=matched,
        ignored=ignored,
        num_gt=int(np.count_nonzero(~gt_ignore)),
    )


def precision_at_recall(matches: list[ImageMatch], cfg: ApConfig) -> np.ndarray | None:
    """Interpolated precision, shape ``(T, R)``; ``None`` when there is no GT."""
    num_gt = sum(m.num_gt for m in matches)
    if num_gt == 0:
        return None
    T, R = len(cfg.iou_thresholds), len(cfg.recall_points)
    if not matches:
        return np.zeros((T, R))
    scores = np.concatenate([m.scores for m in matches])
    order = np.argsort(-scores, kind="mergesort")
    matched = np.concatenate([m.matched for m in matches], axis=1)[:, order]
    ignored = np.concatenate([m.ignored for m in matches], axis=1)[:, order]
    tps = matched & ~ignored
    fps = ~matched & ~ignored
    tp_sum = np.cumsum(tps, axis=1, dtype=np.float64)
    fp_sum = np.cumsum(fps, axis=1, dtype=np.float64)
    out = np.zeros((T, R))
    rec_thr = np.asarray(cfg.recall_points)
    for t in range(T):
        tp, fp = tp_sum[t], fp_sum[t]
        if tp.size == 0:
            continue
        rc = tp / num_gt
        pr = tp / (fp + tp + np.spacing(1))
        # make precision monotonically non-increasing from the right
        pr = np.maximum.accumulate(pr[::-1])[::-1]
        idx = np.searchsorted(rc, rec_thr, side="left")
        valid = idx < pr.size
        out[t, valid] = pr[idx[valid]]
    return out


def compute_ap(per_category: dict[int, dict[str, list[ImageMatch]]], cfg: ApConfig) -> ApReport:
    """Average the interpolated precision tables.

    ``per_category[cat][area_name]`` holds the image matches for that cell.
    Categories without GT in a range are left out of that range's mean.
    """
    thr = np.asarray(cfg.iou_thresholds)
    tables: dict[str, dict[int, np.ndarray]] = defaultdict(dict)
    for cat, by_area in per_category.items():
        for area_name, matches in by_area.items():
            p = precision_at_recall(matches, cfg)
            if p is not None:
                tables[area_name][cat] = p

    def mean(area_name: str, thresh_mask=None, cats=None) -> float | None:
        cells = [
            tab if thresh_mask is None else tab[thresh_mask]
            for c, tab in tables.get(area_name, {}).items()
            if cats is None or c in cats
        ]
        if not cells:
            return None
        return float(np.mean(np.stack(cells)))

    m50 = np.isclose(thr, 0.5)
    m75 = np.isclose(thr, 0.75)

    def summary(cats=None) -> dict:
        return {
            "ap": mean("all", None, cats),
            "ap50": mean("all", m50, cats) if m50.any() else None,
            "ap75": mean("all", m75, cats) if m75.any() else None,
            "ap_s": mean("small", None, cats),
            "ap_m": mean("medium", None, cats),
            "ap_l": mean("large", None, cats),
        }

    overall = summary()
    per_cat = {c: summary({c}) for c in sorted(per_category)}
    return ApReport(**overall, per_category=per_cat)


def evaluate_instances(images: dict[int, tuple[int, int]], gts: dict, dets: dict, cfg: ApConfig, threads: int = 1, categories=None):
    """Evaluate decoded instances.

    ``gts[(image_id, cat)]`` and ``dets[(image_id, cat)]`` are lists of
    :class:`Instance`. Returns ``(report, {image_id: d})``.
    """
    cats = sorted(set(categories or ()) | {c for _, c in gts} | {c for _, c in dets})
    d_by_image = {i: pixel_distance(h, w, cfg.dilation_ratio) for i, (h, w) in images.items()}
    keys = sorted(set(gts) | set(dets))

    def one(key):
        g = gts.get(key, [])
        dt = sorted(dets.get(key, []), key=lambda x: -x.score)[: cfg.max_detections]
        ious = pairwise_iou_matrix(g, dt, cfg, d_by_image[key[0]])
        return key, {a: match_image_category(g, dt, ious, rng, cfg) for a, rng in AREA_RANGES.items()}

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, keys))
    else:
        results = [one(k) for k in keys]

    per_category: dict[int, dict[str, list[ImageMatch]]] = {c: {a: [] for a in AREA_RANGES} for c in cats}
    for (_, cat), by_area in results:
        for a, m in by_area.items():
            per_category[cat][a].append(m)
    return compute_ap(per_category, cfg), d_by_image


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def load_gt(path_or_data):
    """Parse a COCO-style GT file into ``(images, categories, instances)``."""
    if isinstance(path_or_data, dict):
        data, name = path_or_data, "<gt>"
    else:
        with open(path_or_data) as fh:
            data = json.load(fh)
        name = str(path_or_data)
    images = {int(im["id"]): (int(im["height"]), int(im["width"])) for im in data["images"]}
    categories = {int(c["id"]): c.get("name", str(c["id"])) for c in data.get("categories", [])}
    gts: dict = defaultdict(list)
    for ann in data.get("annotations", []):
        image_id, cat = int(ann["image_id"]), int(ann["category_id"])
        if image_id not in images:
            raise ReferentialIntegrityError(f"{name}: annotation {ann.get('id')} has unknown image_id {image_id}")
        if categories and cat not in categories:
            raise ReferentialIntegrityError(f"{name}: annotation {ann.get('id')} has unknown category_id {cat}")
        h, w = images[image_id]
        try:
            mask = decode_segmentation(ann["segmentation"], h, w)
        except (MalformedEncodingError, KeyError, TypeError, ValueError) as exc:
            raise MalformedAnnotationError(f"{name}: annotation {ann.get('id')}: {exc}") from None
        area = float(ann["area"]) if "area" in ann else float(mask.sum())
        gts[(image_id, cat)].append(
            Instance(mask, area, iscrowd=bool(ann.get("iscrowd", 0)), id=ann.get("id"))
        )
    if not categories:
        categories = {c: str(c) for _, c in gts}
    return images, categories, dict(gts)


def load_detections(path_or_data, images, categories):
    if isinstance(path_or_data, list):
        data, name = path_or_data, "<detections>"
    else:
        with open(path_or_data) as fh:
            data = json.load(fh)
        name = str(path_or_data)
    dets: dict = defaultdict(list)
    for k, det in enumerate(data):
        image_id, cat = int(det["image_id"]), int(det["category_id"])
        if image_id not in images:
            raise ReferentialIntegrityError(f"{name}: detection {k} has unknown image_id {image_id}")
        if cat not in categories:
            raise ReferentialIntegrityError(f"{name}: detection {k} has unknown category_id {cat}")
        score = float(det["score"])
        if not np.isfinite(score):
            raise MalformedAnnotationError(f"{name}: detection {k} has non-finite score")
        h, w = images[image_id]
        try:
            mask = decode_segmentation(det["segmentation"], h, w)
        except (MalformedEncodingError, KeyError, TypeError, ValueError) as exc:
            raise MalformedAnnotationError(f"{name}: detection {k}: {exc}") from None
        dets[(image_id, cat)].append(Instance(mask, float(mask.sum()), score=score, id=k))
    return dict(dets)


def evaluate_detections(gt_file, det_file, cfg: ApConfig | None = None, threads: int = 1):
    """End-to-end AP. Returns ``(report, {image_id: d})``."""
    cfg = cfg or ApConfig()
    images, categories, gts = load_gt(gt_file)
    dets = load_detections(det_file, images, categories)
    return evaluate_instances(images, gts, dets, cfg, threads, categories)
