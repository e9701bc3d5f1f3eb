"""Command-line front end: ``boundary-iou <subcommand> ...``.

Subcommands: measure, eval-ap, eval-pq, simulate, sensitivity. Every output
is written atomically and is byte-stable for fixed inputs and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .detection import (
    ApConfig,
    MalformedAnnotationError,
    ReferentialIntegrityError,
    evaluate_instances,
    load_detections,
    load_gt,
)
from .mask import FrameMismatchError, MalformedEncodingError, Polygon, decode_segmentation, encode_rle
from .measures import MEASURE_NAMES, MeasureConfig, measure_all
from .panoptic import MalformedMapError, evaluate_panoptic
from .rng import RngStream, derive_seed
from .sensitivity import (
    AreaBinning,
    GtObject,
    atomic_write,
    builtin_objects,
    curves_to_csv,
    run_severity_sweep,
    run_size_sweep,
)
from .simulate import ERROR_KINDS, POLYGON_KINDS, ErrorSpec, MissingPolygonError, apply_error

DILATION_PRESETS = {"coco": 0.02, "cityscapes": 0.005}

# severities used for size sweeps when none is given
DEFAULT_SIZE_SEVERITY = {
    "scale_dilation": 5,
    "scale_erosion": 5,
    "boundary_localization": 10,
    "object_localization": 10,
    "boundary_approximation": 5,
    "inner_mask": 5,
}
DEFAULT_SEVERITIES = (0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15)
DEFAULT_SWEEP_MEASURES = ("mask_iou", "trimap_iou", "f_measure", "boundary_iou")


class CliError(Exception):
    pass


def _ratio(value: str) -> float:
    if value in DILATION_PRESETS:
        return DILATION_PRESETS[value]
    try:
        r = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or one of {', '.join(DILATION_PRESETS)}, got {value!r}"
        ) from None
    if not r > 0:
        raise argparse.ArgumentTypeError("dilation ratio must be > 0")
    return r


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {value!r}") from None


def _name_list(choices):
    def parse(value: str) -> list[str]:
        names = [v.strip() for v in value.split(",") if v.strip()]
        bad = [n for n in names if n not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown {bad}; choose from {', '.join(choices)}")
        return names

    return parse


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _provenance(args, d_pixels=None) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads", "out")}
    prov = {"tool": "boundary-iou", "version": __version__, "command": args.command, "config": config}
    if d_pixels is not None:
        prov["d_pixels"] = {str(k): v for k, v in sorted(d_pixels.items())}
    return prov


def _require(*paths):
    for p in paths:
        if p and not os.path.exists(p):
            raise CliError(f"{p}: no such file")


def _load_mask_record(path: str):
    with open(path) as fh:
        try:
            rec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(rec, dict) or "size" not in rec:
        raise CliError(f"{path}: mask record needs a 'size' field [height, width]")
    try:
        h, w = (int(x) for x in rec["size"])
        if "counts" in rec:
            return decode_segmentation({"size": [h, w], "counts": rec["counts"]}, h, w)
        if "polygon" in rec:
            return decode_segmentation([rec["polygon"]], h, w)
        if "polygons" in rec:
            return decode_segmentation(rec["polygons"], h, w)
    except (MalformedEncodingError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None
    raise CliError(f"{path}: mask record needs 'counts', 'polygon' or 'polygons'")


def cmd_measure(args) -> int:
    _require(args.gt, args.pred)
    gt = _load_mask_record(args.gt)
    pred = _load_mask_record(args.pred)
    if gt.shape != pred.shape:
        raise CliError(f"{args.pred}: field 'size' {list(pred.shape)} does not match {args.gt} {list(gt.shape)}")
    report = measure_all(gt, pred, MeasureConfig(dilation_ratio=args.dilation_ratio))
    _emit(_dump(report.to_json()), args.out)
    return 0


def _measures(choice: str) -> list[str]:
    return ["mask", "boundary"] if choice == "both" else [choice]


def cmd_eval_ap(args) -> int:
    _require(args.gt, args.pred)
    images, categories, gts = load_gt(args.gt)
    dets = load_detections(args.pred, images, categories)
    out = {}
    d_pixels = None
    for m in _measures(args.measure):
        cfg = ApConfig(iou_measure=m, dilation_ratio=args.dilation_ratio)
        report, d_pixels = evaluate_instances(images, gts, dets, cfg, args.threads, categories)
        out[m] = report.to_json()
    _emit(_dump({"provenance": _provenance(args, d_pixels), **out}), args.out)
    return 0


def cmd_eval_pq(args) -> int:
    _require(args.gt, args.pred)
    out = {}
    d_pixels = None
    for m in _measures(args.measure):
        report, d_pixels = evaluate_panoptic(args.gt, args.pred, m, args.dilation_ratio, args.threads)
        out[m] = report.to_json()
    _emit(_dump({"provenance": _provenance(args, d_pixels), **out}), args.out)
    return 0


def _annotation_polygons(seg):
    if isinstance(seg, list):
        if seg and not isinstance(seg[0], (list, tuple)):
            seg = [seg]
        return [Polygon.from_flat(p) for p in seg]
    return None


def simulate_detections(gt_data: dict, spec: ErrorSpec, threads: int = 1) -> list[dict]:
    """Pseudo-predictions (score 1.0, RLE) for every non-crowd GT annotation."""
    frames = {int(im["id"]): (int(im["height"]), int(im["width"])) for im in gt_data["images"]}
    anns = [a for a in gt_data.get("annotations", []) if not a.get("iscrowd")]

    def one(item):
        index, ann = item
        h, w = frames[int(ann["image_id"])]
        mask = decode_segmentation(ann["segmentation"], h, w)
        polys = _annotation_polygons(ann["segmentation"])
        if spec.kind in POLYGON_KINDS and polys is None:
            raise MissingPolygonError(
                f"annotation {ann.get('id', index)}: error kind {spec.kind!r} needs polygon segmentation, got RLE"
            )
        key = int(ann.get("id", index))
        pred = apply_error(spec, mask, polys, RngStream(derive_seed(spec.seed, key)))
        return {
            "image_id": int(ann["image_id"]),
            "category_id": int(ann["category_id"]),
            "segmentation": encode_rle(pred).to_json(),
            "score": 1.0,
        }

    items = list(enumerate(anns))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, items))
    return [one(it) for it in items]


def cmd_simulate(args) -> int:
    _require(args.gt)
    with open(args.gt) as fh:
        gt_data = json.load(fh)
    spec = ErrorSpec(args.error, args.severity, args.seed)
    dets = simulate_detections(gt_data, spec, args.threads)
    _emit(json.dumps(dets, separators=(",", ":")) + "\n", args.out)
    return 0


def _objects_from_gt(path: str) -> list[GtObject]:
    with open(path) as fh:
        data = json.load(fh)
    frames = {int(im["id"]): (int(im["height"]), int(im["width"])) for im in data["images"]}
    objs = []
    for ann in data.get("annotations", []):
        if ann.get("iscrowd"):
            continue
        h, w = frames[int(ann["image_id"])]
        objs.append(GtObject(decode_segmentation(ann["segmentation"], h, w), _annotation_polygons(ann["segmentation"])))
    if not objs:
        raise CliError(f"{path}: no usable annotations")
    return objs


def cmd_sensitivity(args) -> int:
    _require(args.gt)
    objs = _objects_from_gt(args.gt) if args.gt else builtin_objects(args.seed)
    kinds = args.error or list(ERROR_KINDS)
    measures = args.measures or list(DEFAULT_SWEEP_MEASURES)
    severities = args.severities or list(DEFAULT_SEVERITIES)
    binning = AreaBinning(tuple(args.bins)) if args.bins else AreaBinning()
    curves = []
    for kind in kinds:
        if args.sweep in ("severity", "both"):
            curves += run_severity_sweep(objs, kind, severities, measures, args.dilation_ratio, args.seed, args.threads)
        if args.sweep in ("size", "both"):
            sev = args.size_severity if args.size_severity is not None else DEFAULT_SIZE_SEVERITY[kind]
            curves += run_size_sweep(objs, kind, sev, measures, binning, args.dilation_ratio, args.seed, args.threads)
    _emit(curves_to_csv(curves), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boundary-iou", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, pred=True):
        sp.add_argument("--gt", required=True, help="ground-truth file")
        if pred:
            sp.add_argument("--pred", required=True, help="prediction file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--dilation-ratio", type=_ratio, default=0.02,
                        help="boundary width as a fraction of the image diagonal, or a preset "
                             f"({', '.join(f'{k}={v}' for k, v in DILATION_PRESETS.items())})")
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("measure", help="all pairwise measures for one GT/prediction mask pair")
    common(sp)
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("eval-ap", help="Mask AP and/or Boundary AP on COCO-style files")
    common(sp)
    sp.add_argument("--measure", choices=("mask", "boundary", "both"), default="both")
    sp.set_defaults(func=cmd_eval_ap)

    sp = sub.add_parser("eval-pq", help="Mask PQ and/or Boundary PQ on panoptic files")
    common(sp)
    sp.add_argument("--measure", choices=("mask", "boundary", "both"), default="both")
    sp.set_defaults(func=cmd_eval_pq)

    sp = sub.add_parser("simulate", help="write pseudo-predictions for a GT file")
    common(sp, pred=False)
    sp.add_argument("--error", choices=ERROR_KINDS, required=True)
    sp.add_argument("--severity", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sensitivity", help="sensitivity curves as CSV")
    sp.add_argument("--gt", help="COCO-style GT file (default: built-in synthetic shapes)")
    sp.add_argument("--out", help="output path (default: stdout)")
    sp.add_argument("--dilation-ratio", type=_ratio, default=0.02)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--error", type=_name_list(ERROR_KINDS), help="comma-separated error kinds (default: all)")
    sp.add_argument("--measures", type=_name_list(MEASURE_NAMES),
                    help=f"comma-separated measures (default: {','.join(DEFAULT_SWEEP_MEASURES)})")
    sp.add_argument("--severities", type=_float_list, help="comma-separated severities for the severity sweep")
    sp.add_argument("--sweep", choices=("severity", "size", "both"), default="both")
    sp.add_argument("--size-severity", type=float, help="fixed severity for the size sweep")
    sp.add_argument("--bins", type=_float_list, help="comma-separated pixel-area bin edges")
    sp.set_defaults(func=cmd_sensitivity)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, MalformedEncodingError, MalformedAnnotationError, ReferentialIntegrityError,
            MalformedMapError, MissingPolygonError, FrameMismatchError, ValueError, OSError) as exc:
        print(f"boundary-iou {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
