"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``.
"""

import json
import time

import numpy as np
import pytest

from boundary_iou.cli import main
from boundary_iou.detection import AREA_RANGES, ApConfig, Instance, compute_ap, evaluate_detections, match_image_category
from boundary_iou.mask import boundary_region, dilate, erode, pixel_distance
from boundary_iou.measures import MeasureConfig, boundary_iou, combined_iou, f_measure, mask_iou, mf_measure, pixel_accuracy, trimap_iou
from boundary_iou.panoptic import evaluate_maps
from boundary_iou.rng import RngStream, derive_seed
from boundary_iou.sensitivity import builtin_objects
from boundary_iou.shapes import centered_square, disc, gt_to_detections, synthetic_instance_dataset, synthetic_panoptic_dataset
from boundary_iou.simulate import ERROR_KINDS, ErrorSpec, apply_error, cap_resolution_instance, cap_resolution_panoptic

from conftest import random_blobby
from oracles import boundary_by_distance, brute_ap, chebyshev_depth


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {detail}")
        assert ok, detail

    return emit


def random_pairs(n, seed, max_side=64):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        h, w = rng.integers(8, max_side + 1, size=2)
        out.append((random_blobby(rng, h, w), random_blobby(rng, h, w)))
    return out


@pytest.fixture(scope="module")
def instance_fixture():
    gt = synthetic_instance_dataset(n_images=30, seed=0)
    dets = gt_to_detections(gt, lambda m, ann: cap_resolution_instance(m, 28))
    return gt, dets


@pytest.fixture(scope="module")
def panoptic_fixture():
    return synthetic_panoptic_dataset(n_images=6, seed=0)


def test_c01_boundary_region_matches_distance_transform(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad = 0
    for _ in range(100):
        h, w = rng.integers(1, 65, size=2)
        m = random_blobby(rng, h, w) if rng.random() < 0.5 else rng.random((h, w)) < rng.random()
        for d in (1, 2, 5):
            bad += not np.array_equal(boundary_region(m, d), boundary_by_distance(m, d))
    dt = time.perf_counter() - t0
    report(1, bad == 0 and dt < 10, f"boundary_region vs Chebyshev oracle: {bad} mismatches / 300, {dt:.2f}s")


def test_c02_degenerate_d_equals_mask(report, instance_fixture, panoptic_fixture):
    pairs = random_pairs(50, 2)
    diffs = 0
    for g, p in pairs:
        d = int(np.ceil(np.hypot(*g.shape)))
        diffs += boundary_iou(g, p, d) != mask_iou(g, p)

    gt, dets = instance_fixture
    gt = dict(gt, images=gt["images"][:6], annotations=[a for a in gt["annotations"] if a["image_id"] <= 6])
    dets = [x for x in dets if x["image_id"] <= 6]
    ap_m, _ = evaluate_detections(gt, dets, ApConfig("mask"))
    ap_b, ds = evaluate_detections(gt, dets, ApConfig("boundary", dilation_ratio=1.0))
    ap_equal = ap_m.to_json() == ap_b.to_json() and min(ds.values()) >= np.hypot(480, 640)

    pan = [(m, cap_resolution_panoptic(m, 4)) for m in panoptic_fixture]
    pq_m, _ = evaluate_maps(pan, "mask")
    pq_b, _ = evaluate_maps(pan, "boundary", dilation_ratio=1.0)
    pq_equal = pq_m.to_json() == pq_b.to_json()
    report(2, diffs == 0 and ap_equal and pq_equal,
           f"pairs differing {diffs}/50; AP identical={ap_equal} (AP {ap_m.ap:.4f}); "
           f"PQ identical={pq_equal} (PQ {pq_m.overall['pq']:.4f})")


def test_c03_disc_ring(report):
    R, d = 40, 5
    g = disc(128, 128, R)
    # ring = disc minus everything deeper than d (distance-transform construction)
    ring = g & (chebyshev_depth(g) <= d)
    b = boundary_iou(g, ring, d)
    c = combined_iou(g, ring, d)
    report(3, b == 1.0 and c < 1.0, f"boundary_iou={b!r}, combined_iou={c:.4f}")


def test_c04_symmetry(report):
    t0 = time.perf_counter()
    cfg = MeasureConfig()
    asym = {"boundary_iou": 0, "mask_iou": 0, "f_measure": 0, "mf_measure": 0}
    for g, p in random_pairs(500, 4):
        d = pixel_distance(*g.shape, 0.02)
        asym["boundary_iou"] += boundary_iou(g, p, d) != boundary_iou(p, g, d)
        asym["mask_iou"] += mask_iou(g, p) != mask_iou(p, g)
        asym["f_measure"] += f_measure(g, p, d) != f_measure(p, g, d)
        asym["mf_measure"] += mf_measure(g, p, cfg) != mf_measure(p, g, cfg)
    small = centered_square(60, 60, 10)
    big = centered_square(60, 60, 40)
    tri = (trimap_iou(small, big, 3), trimap_iou(big, small, 3))
    pa = (pixel_accuracy(small, big), pixel_accuracy(big, small))
    dt = time.perf_counter() - t0
    ok = not any(asym.values()) and tri[0] != tri[1] and pa[0] != pa[1] and dt < 30
    report(4, ok, f"asymmetric counts {asym}; trimap witness {tri[0]:.3f}/{tri[1]:.3f}; "
                  f"pixel-acc witness {pa[0]:.3f}/{pa[1]:.3f}; {dt:.2f}s")


def test_c05_trimap_asymmetry(report):
    g = centered_square(300, 300, 100)
    up = trimap_iou(g, dilate(g, 40), 8)
    down = trimap_iou(g, erode(g, 40), 8)
    report(5, up >= 0.2 and down == 0.0, f"dilation 40 -> {up:.4f}, erosion 40 -> {down:.4f}")


def test_c06_f_measure_step(report):
    g = centered_square(300, 300, 100)
    d = 8
    near = f_measure(g, dilate(g, d - 1), d)
    far = f_measure(g, dilate(g, 2 * d + 2), d)
    report(6, near >= 0.99 and far <= 0.1, f"dilate d-1 -> {near:.4f}, dilate 2d+2 -> {far:.4f}")


def test_c07_scale_bias(report):
    vals = {}
    for s in (32, 128):
        g = centered_square(1000, 1000, s)
        p = dilate(g, 5)
        vals[s] = (mask_iou(g, p), boundary_iou(g, p, 15))
    dm = vals[128][0] - vals[32][0]
    db = abs(vals[128][1] - vals[32][1])
    report(7, dm > 0.1 and db < 0.05,
           f"mask IoU 32/128 = {vals[32][0]:.4f}/{vals[128][0]:.4f} (gap {dm:.4f}); "
           f"boundary IoU = {vals[32][1]:.4f}/{vals[128][1]:.4f} (gap {db:.4f})")


def test_c08_resolution_capped_ap(report, instance_fixture):
    t0 = time.perf_counter()
    gt, dets = instance_fixture
    areas = [a["area"] for a in gt["annotations"]]
    counts = {k: sum(1 for a in areas if lo < a <= hi or (lo == 0 and a <= hi)) for k, (lo, hi) in AREA_RANGES.items()}
    m, _ = evaluate_detections(gt, dets, ApConfig("mask"), threads=4)
    b, _ = evaluate_detections(gt, dets, ApConfig("boundary"), threads=4)
    dt = time.perf_counter() - t0
    s_gap = abs(m.ap_s - b.ap_s) * 100
    l_gap = (m.ap_l - b.ap_l) * 100
    ok = len(areas) >= 200 and min(counts["small"], counts["medium"], counts["large"]) > 0 \
        and s_gap <= 1 and l_gap > 15 and dt < 120
    report(8, ok, f"{len(areas)} objects (S/M/L {counts['small']}/{counts['medium']}/{counts['large']}); "
                  f"AP_S mask/boundary {100 * m.ap_s:.1f}/{100 * b.ap_s:.1f}; "
                  f"AP_L {100 * m.ap_l:.1f}/{100 * b.ap_l:.1f} (gap {l_gap:.1f}); {dt:.1f}s")


def test_c09_downscaled_panoptic(report, panoptic_fixture):
    res = {}
    for ratio in (8, 2):
        pairs = [(m, cap_resolution_panoptic(m, ratio)) for m in panoptic_fixture]
        res[ratio] = (evaluate_maps(pairs, "mask")[0].overall, evaluate_maps(pairs, "boundary")[0].overall)
    m8, b8 = res[8]
    m2, b2 = res[2]
    sq_gap = 100 * (m8["sq"] - b8["sq"])
    rq_gap = 100 * abs(m8["rq"] - b8["rq"])
    ok = sq_gap > 5 and rq_gap < 2 and m2["pq"] >= 0.85 and b2["pq"] >= 0.85 and b2["pq"] <= m2["pq"]
    report(9, ok, f"ratio 8: SQ gap {sq_gap:.1f}, RQ gap {rq_gap:.1f}; "
                  f"ratio 2: PQ mask/boundary {100 * m2['pq']:.1f}/{100 * b2['pq']:.1f}")


def test_c10_ap_bruteforce(report):
    rng = np.random.default_rng(10)
    cfg = ApConfig()
    worst = 0.0
    dummy = np.zeros((1, 1), bool)
    for _ in range(50):
        n_gt, n_det = int(rng.integers(1, 4)), int(rng.integers(0, 6))
        ious = rng.random((n_det, n_gt))
        ious[rng.random((n_det, n_gt)) < 0.3] = 0.0
        scores = list(rng.permutation(n_det) / max(n_det, 1) + 0.01)
        order = sorted(range(n_det), key=lambda i: -scores[i])
        gts = [Instance(dummy, 400.0) for _ in range(n_gt)]
        dets = [Instance(dummy, 400.0, score=scores[i]) for i in order]
        match = match_image_category(gts, dets, ious[order], AREA_RANGES["all"], cfg)
        got = compute_ap({1: {"all": [match]}}, cfg).ap
        want = brute_ap(ious, scores, cfg.iou_thresholds, cfg.recall_points)
        worst = max(worst, abs(got - want))
    report(10, worst <= 1e-9, f"max |compute_ap - brute force| = {worst:.2e} over 50 cases")


def test_c11_empirical_dominance(report):
    objs = builtin_objects(0)
    severities = (1, 3, 6, 10, 15)
    n, violations = 0, {}
    for kind in ERROR_KINDS:
        for j, sev in enumerate(severities):
            for i, o in enumerate(objs):
                d = pixel_distance(*o.mask.shape, 0.02)
                p = apply_error(ErrorSpec(kind, sev), o.mask, o.polygons, RngStream(derive_seed(0, i, j)))
                n += 1
                if boundary_iou(o.mask, p, d) > mask_iou(o.mask, p):
                    violations[kind] = violations.get(kind, 0) + 1
    frac = 1 - sum(violations.values()) / n
    ok = n >= 1000 and frac >= 0.99 and set(violations) <= {"inner_mask"}
    report(11, ok, f"{n} pairs, boundary <= mask in {100 * frac:.2f}%; violations by kind {violations}")


def test_c12_determinism(report, tmp_path):
    gt = tmp_path / "gt.json"
    gt.write_text(json.dumps(synthetic_instance_dataset(n_images=4, seed=5)))
    runs = {
        "simulate": ["simulate", "--gt", str(gt), "--error", "boundary_localization", "--severity", "4", "--seed", "11"],
        "sensitivity": ["sensitivity", "--gt", str(gt), "--error", "inner_mask,boundary_localization",
                        "--severities", "1,5", "--sweep", "severity", "--measures", "mask_iou,boundary_iou",
                        "--seed", "11"],
    }
    same = {}
    for name, argv in runs.items():
        blobs = []
        for k, threads in enumerate(("1", "1", "4", "4")):
            out = tmp_path / f"{name}{k}.out"
            assert main(argv + ["--threads", threads, "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        same[name] = len(set(blobs)) == 1
    report(12, all(same.values()), f"byte-identical across 2 runs x threads {{1, 4}}: {same}")
