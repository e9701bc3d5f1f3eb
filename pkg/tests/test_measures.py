import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundary_iou.mask import FrameMismatchError, boundary_region, dilate
from boundary_iou.measures import (
    MEASURE_NAMES,
    MeasureConfig,
    boundary_iou,
    combined_iou,
    evaluate_measure,
    f_measure,
    mask_iou,
    measure_all,
    mf_measure,
    pixel_accuracy,
    trimap_iou,
)

from conftest import mask_pairs, random_blobby
from oracles import boundary_by_distance


def block(h, w, r0, c0, size):
    m = np.zeros((h, w), dtype=bool)
    m[r0:r0 + size, c0:c0 + size] = True
    return m


def square_dilation_biou(s, k, d):
    """Closed form for a centred s-square against its k-dilation, s > 2d, k < d."""
    g = 4 * s * d - 4 * d * d
    p = 4 * (s + 2 * k) * d - 4 * d * d
    inter = 4 * s * (d - k) - 4 * (d - k) ** 2
    return inter / (g + p - inter)


# -- worked examples ---------------------------------------------------------


def test_mask_iou_half_overlap():
    g = np.zeros((4, 4), bool)
    g[:, :2] = True
    p = np.zeros((4, 4), bool)
    p[:, 1:3] = True
    assert mask_iou(g, p) == pytest.approx(1 / 3)


def test_empty_conventions():
    e = np.zeros((5, 5), bool)
    f = block(5, 5, 1, 1, 2)
    assert mask_iou(e, e) == 1.0
    assert boundary_iou(e, e, 2) == 1.0
    assert boundary_iou(e, f, 2) == 0.0
    assert boundary_iou(f, e, 2) == 0.0
    assert f_measure(e, e, 1) == 1.0
    assert f_measure(e, f, 1) == 0.0
    assert pixel_accuracy(e, e) == 1.0
    assert pixel_accuracy(e, f) == 0.0
    assert trimap_iou(e, e, 3) == 1.0


def test_frame_mismatch_raises():
    with pytest.raises(FrameMismatchError):
        mask_iou(np.zeros((3, 3), bool), np.zeros((3, 4), bool))


@pytest.mark.parametrize("s, k, d", [(32, 5, 15), (128, 5, 15), (60, 2, 9), (200, 7, 16)])
def test_boundary_iou_square_dilation_closed_form(s, k, d):
    n = s + 2 * k + 8
    g = block(n, n, k + 4, k + 4, s)
    p = dilate(g, k)
    assert boundary_iou(g, p, d) == pytest.approx(square_dilation_biou(s, k, d), abs=1e-12)


def test_boundary_iou_size_invariant_where_mask_iou_is_not():
    vals = {}
    for s in (32, 128):
        n = s + 20
        g = block(n, n, 10, 10, s)
        p = dilate(g, 5)
        vals[s] = (mask_iou(g, p), boundary_iou(g, p, 15))
    assert vals[32][1] == pytest.approx(0.5)
    assert vals[128][1] == pytest.approx(0.5)
    assert vals[128][0] - vals[32][0] > 0.2


def test_trimap_ignores_pixels_beyond_band():
    g = block(200, 200, 50, 50, 100)
    p = block(200, 200, 10, 10, 180)  # gt dilated by 40
    assert trimap_iou(g, p, 8) == pytest.approx(2944 / 6400)


def test_f_measure_distance_regimes():
    g = block(80, 80, 20, 20, 40)
    d = 5
    assert f_measure(g, dilate(g, d - 1), d) == 1.0
    assert f_measure(g, dilate(g, 2 * d + 2), d) == 0.0


def test_f_measure_value_equals_precision_recall_oracle(np_rng):
    for _ in range(10):
        g = random_blobby(np_rng, 40, 40)
        p = random_blobby(np_rng, 40, 40)
        if not g.any() or not p.any():
            continue
        g1, p1 = boundary_by_distance(g, 1), boundary_by_distance(p, 1)
        # distance from each contour pixel to the other contour, brute force
        gpts, ppts = np.argwhere(g1), np.argwhere(p1)
        cheb = np.abs(ppts[:, None, :] - gpts[None, :, :]).max(-1)
        prec = (cheb.min(1) <= 3).mean()
        rec = (cheb.min(0) <= 3).mean()
        want = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
        assert f_measure(g, p, 3) == pytest.approx(want, abs=1e-12)


def test_mf_measure_is_mean_over_ladder():
    g = block(100, 100, 30, 30, 40)
    p = dilate(g, 2)
    cfg = MeasureConfig(mf_ratios=(0.01, 0.03))
    # diag 141.42: d = 1 and 4
    want = (f_measure(g, p, 1) + f_measure(g, p, 4)) / 2
    assert mf_measure(g, p, cfg) == pytest.approx(want)
    assert f_measure(g, p, 1) == 0.0 and f_measure(g, p, 4) == 1.0
    assert mf_measure(g, p, cfg) == pytest.approx(0.5)


def test_combined_closes_disc_ring_loophole():
    from boundary_iou.shapes import disc

    g = disc(128, 128, 48)
    p = boundary_region(g, 8)
    assert boundary_iou(g, p, 8) == 1.0
    assert combined_iou(g, p, 8) == pytest.approx(mask_iou(g, p))
    assert combined_iou(g, p, 8) < 0.7


def test_pixel_accuracy_and_trimap_are_asymmetric():
    small = block(60, 60, 25, 25, 10)
    big = block(60, 60, 10, 10, 40)
    assert pixel_accuracy(small, big) == 1.0
    assert pixel_accuracy(big, small) == pytest.approx(100 / 1600)
    assert trimap_iou(small, big, 3) != trimap_iou(big, small, 3)


# -- invariants --------------------------------------------------------------


SYMMETRIC = ("mask_iou", "f_measure", "boundary_iou", "combined_iou")


@given(mask_pairs(), st.integers(1, 6))
def test_measures_in_unit_interval(pair, d):
    g, p = pair
    for name in MEASURE_NAMES:
        v = evaluate_measure(name, g, p, d)
        assert 0.0 <= v <= 1.0


@given(mask_pairs(), st.integers(1, 6))
def test_symmetric_measures(pair, d):
    g, p = pair
    for name in SYMMETRIC:
        assert evaluate_measure(name, g, p, d) == pytest.approx(evaluate_measure(name, p, g, d))


@given(mask_pairs(), st.integers(1, 6))
def test_identity_scores_one(pair, d):
    g, _ = pair
    for name in MEASURE_NAMES:
        assert evaluate_measure(name, g, g, d) == 1.0


@given(mask_pairs(), st.integers(1, 6))
def test_combined_is_min(pair, d):
    g, p = pair
    c = combined_iou(g, p, d)
    assert c == min(mask_iou(g, p), boundary_iou(g, p, d))


@given(mask_pairs())
def test_boundary_iou_with_huge_d_is_mask_iou(pair):
    g, p = pair
    d = max(g.shape)
    assert boundary_iou(g, p, d) == pytest.approx(mask_iou(g, p)) or not (g.any() and p.any())


def test_boundary_iou_decreases_with_dilation():
    g = block(120, 120, 30, 30, 60)
    vals = [boundary_iou(g, dilate(g, k), 10) for k in range(0, 12)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[0] == 1.0 and vals[-1] == 0.0


def test_d_below_one_rejected():
    g = block(10, 10, 2, 2, 4)
    with pytest.raises(ValueError):
        f_measure(g, g, 0)


def test_measure_config_validation():
    with pytest.raises(ValueError):
        MeasureConfig(dilation_ratio=0)
    with pytest.raises(ValueError):
        MeasureConfig(mf_ratios=())
    with pytest.raises(ValueError):
        MeasureConfig(mf_ratios=(0.02, 0.01))


def test_measure_report_json():
    g = block(480, 640, 100, 100, 80)
    r = measure_all(g, dilate(g, 3))
    doc = json.loads(json.dumps(r.to_json()))
    assert set(doc) == set(MEASURE_NAMES) | {"d_pixels"}
    assert doc["d_pixels"] == 16
    assert doc["combined_iou"] == min(doc["mask_iou"], doc["boundary_iou"])


def test_unknown_measure_name():
    g = block(10, 10, 2, 2, 4)
    with pytest.raises(ValueError):
        evaluate_measure("nope", g, g, 1)
