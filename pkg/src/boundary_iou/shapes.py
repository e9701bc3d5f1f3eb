"""Bundled synthetic shapes and datasets for data-free experiments."""

from __future__ import annotations

import math

import numpy as np

from .mask import Polygon, encode_rle, rasterize_polygon
from .rng import RngStream


def square_polygon(cx: float, cy: float, side: float) -> Polygon:
    h = side / 2.0
    return Polygon([(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)])


def centered_square(height: int, width: int, side: int) -> np.ndarray:
    """Axis-aligned ``side x side`` block as close to the frame centre as possible."""
    m = np.zeros((height, width), dtype=bool)
    r0, c0 = (height - side) // 2, (width - side) // 2
    m[r0:r0 + side, c0:c0 + side] = True
    return m


def disc(height: int, width: int, radius: float, center=None) -> np.ndarray:
    cy, cx = center if center is not None else (height / 2.0, width / 2.0)
    yy, xx = np.mgrid[0:height, 0:width]
    return (yy + 0.5 - cy) ** 2 + (xx + 0.5 - cx) ** 2 <= radius**2


def blob_polygon(rng: RngStream, cx: float, cy: float, radius: float, n_vertices: int = 96,
                 harmonics: int = 10, roughness: float = 0.25, jitter: float = 0.03) -> Polygon:
    """Star-shaped outline with random low- and mid-frequency wobble.

    Radial amplitude of harmonic ``k`` decays as ``roughness / k``; ``jitter``
    adds independent per-vertex noise, both relative to ``radius``.
    """
    amps = [rng.uniform(0.3, 1.0) * roughness / k for k in range(2, harmonics + 1)]
    phases = [rng.uniform(0.0, 2.0 * math.pi) for _ in amps]
    total = sum(amps)
    pts = []
    for i in range(n_vertices):
        t = 2.0 * math.pi * i / n_vertices
        wobble = sum(a * math.cos(k * t + p) for k, (a, p) in enumerate(zip(amps, phases), start=2))
        # keep the outline star-shaped and inside the nominal radius budget
        r = radius * (1.0 + wobble / max(1.0, 2.0 * total)) * (1.0 + rng.normal(0.0, jitter))
        r = max(r, 0.2 * radius)
        pts.append((cx + r * math.cos(t), cy + r * math.sin(t)))
    return Polygon(pts)


def noise_blob(rng: RngStream, height: int, width: int, grid: int = 6, threshold: float = 0.55) -> np.ndarray:
    """Thresholded, bilinearly smoothed random field (mask-only shape family)."""
    from .simulate import resize_bilinear

    coarse = np.array([[rng.uniform() for _ in range(grid)] for _ in range(grid)])
    # taper toward the frame edge so the blob stays mostly interior
    t = np.sin(np.linspace(0.0, math.pi, grid))
    coarse *= np.sqrt(np.outer(t, t))
    return resize_bilinear(coarse, height, width) >= threshold * coarse.max()


def _place(rng: RngStream, boxes, size: float, height: int, width: int, margin: float, tries: int = 200):
    for _ in range(tries):
        cx = rng.uniform(size + margin, width - size - margin)
        cy = rng.uniform(size + margin, height - size - margin)
        box = (cx - size - margin, cy - size - margin, cx + size + margin, cy + size + margin)
        if all(box[2] <= b[0] or b[2] <= box[0] or box[3] <= b[1] or b[3] <= box[1] for b in boxes):
            boxes.append(box)
            return cx, cy
    return None


# radius ranges giving areas in the small / medium / large COCO bins
SIZE_RADII = {"small": (6.0, 15.0), "medium": (22.0, 45.0), "large": (70.0, 130.0)}


def synthetic_instance_dataset(n_images: int = 30, seed: int = 0, height: int = 480, width: int = 640,
                               per_image=(2, 3, 3), n_categories: int = 2) -> dict:
    """COCO-format GT with polygon segmentations spanning S/M/L objects.

    ``per_image`` is the number of (large, medium, small) objects attempted
    per image; objects never overlap.
    """
    root = RngStream(seed)
    images, annotations = [], []
    ann_id = 1
    for image_id in range(1, n_images + 1):
        rng = root.derive(image_id)
        images.append({"id": image_id, "height": height, "width": width})
        boxes: list = []
        for size_name, count in zip(("large", "medium", "small"), per_image):
            lo, hi = SIZE_RADII[size_name]
            for _ in range(count):
                radius = rng.uniform(lo, hi)
                spot = _place(rng, boxes, radius * 1.3, height, width, margin=4.0)
                if spot is None:
                    continue
                poly = blob_polygon(rng, spot[0], spot[1], radius)
                mask = rasterize_polygon(poly, height, width)
                area = int(mask.sum())
                if area == 0:
                    continue
                annotations.append({
                    "id": ann_id,
                    "image_id": image_id,
                    "category_id": 1 + rng.randbelow(n_categories),
                    "segmentation": [poly.to_flat()],
                    "area": area,
                    "iscrowd": 0,
                })
                ann_id += 1
    categories = [{"id": c, "name": f"blob{c}"} for c in range(1, n_categories + 1)]
    return {"images": images, "annotations": annotations, "categories": categories}


def synthetic_panoptic_map(rng: RngStream, height: int = 512, width: int = 512, n_things: int = 6,
                           stuff_categories=(101, 102, 103), thing_categories=(1, 2)):
    """One panoptic map: wavy horizontal stuff bands, blob things on top, a void strip."""
    from .panoptic import PanopticLabelMap, Segment

    ids = np.zeros((height, width), dtype=np.int64)
    segments: dict[int, Segment] = {}
    yy, xx = np.mgrid[0:height, 0:width]
    n_bands = len(stuff_categories)
    edges = []
    for b in range(1, n_bands):
        base = height * b / n_bands
        amp = rng.uniform(0.03, 0.08) * height
        freq = rng.uniform(1.0, 3.0) * 2.0 * math.pi / width
        phase = rng.uniform(0.0, 2.0 * math.pi)
        edges.append(base + amp * np.sin(freq * (xx + 0.5) + phase))
    band = np.zeros((height, width), dtype=np.int64)
    for e in edges:
        band += (yy + 0.5) >= e
    next_id = 1
    for b, cat in enumerate(stuff_categories):
        sel = band == b
        if sel.any():
            ids[sel] = next_id
            segments[next_id] = Segment(next_id, cat, False)
            next_id += 1

    boxes: list = []
    for _ in range(n_things):
        radius = rng.uniform(0.05, 0.16) * min(height, width)
        spot = _place(rng, boxes, radius * 1.3, height, width, margin=2.0)
        if spot is None:
            continue
        poly = blob_polygon(rng, spot[0], spot[1], radius)
        m = rasterize_polygon(poly, height, width)
        if not m.any():
            continue
        ids[m] = next_id
        segments[next_id] = Segment(next_id, thing_categories[rng.randbelow(len(thing_categories))], True)
        next_id += 1

    # unlabeled strip along the left edge
    ids[:, : max(1, width // 64)] = 0
    present = set(np.unique(ids).tolist())
    segments = {k: v for k, v in segments.items() if k in present}
    return PanopticLabelMap(ids, segments)


def synthetic_panoptic_dataset(n_images: int = 6, seed: int = 0, height: int = 512, width: int = 512):
    root = RngStream(seed)
    return [synthetic_panoptic_map(root.derive(i), height, width) for i in range(1, n_images + 1)]


def gt_to_detections(gt: dict, transform=None, score: float = 1.0) -> list[dict]:
    """Turn GT annotations into detection records, optionally transforming each mask."""
    from .mask import decode_segmentation

    frames = {im["id"]: (im["height"], im["width"]) for im in gt["images"]}
    out = []
    for ann in gt["annotations"]:
        if ann.get("iscrowd"):
            continue
        h, w = frames[ann["image_id"]]
        m = decode_segmentation(ann["segmentation"], h, w)
        if transform is not None:
            m = transform(m, ann)
        out.append({
            "image_id": ann["image_id"],
            "category_id": ann["category_id"],
            "segmentation": encode_rle(m).to_json(),
            "score": score,
        })
    return out
