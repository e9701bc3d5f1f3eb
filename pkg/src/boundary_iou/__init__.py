"""Boundary IoU and related segmentation measures, Boundary AP and Boundary PQ."""

from .mask import (
    FrameMismatchError,
    MalformedEncodingError,
    Polygon,
    RleMask,
    band_region,
    boundary_region,
    contour,
    decode_rle,
    dilate,
    encode_rle,
    erode,
    pixel_distance,
    rasterize_polygon,
)
from .measures import (
    MeasureConfig,
    MeasureReport,
    boundary_iou,
    combined_iou,
    f_measure,
    mask_iou,
    measure_all,
    mf_measure,
    pixel_accuracy,
    trimap_iou,
)

__version__ = "0.1.0"
