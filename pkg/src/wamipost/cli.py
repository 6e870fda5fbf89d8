"""Command-line entry point.

Exit status: 0 on success, 1 on usage or parameter errors, 2 on I/O or
file-format errors. Diagnostics go to stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import formats
from .benchmark import compare, evaluate_mask
from .errors import ComponentError, ContextError, DimensionError, FormatError, PackingError, ParameterError
from .morphology import StructuringElement
from .report import EvalReport, FrameRow, report_to_csv, report_to_json, write_report
from .schemes import (SCHEME_NAMES, FilteredDilation, GroundTruthContext, HeuristicFiltering, NoOp,
                      Proposed, SieveAndOpen, ShapeIndexFiltering, apply_scheme)
from .synth import CorruptionParams, SceneParams, generate_frames

log = logging.getLogger("wamipost")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_scheme_flags(p, multi=False):
    if multi:
        p.add_argument("--schemes", default=",".join(SCHEME_NAMES),
                       help="comma-separated scheme names (default: all)")
    else:
        p.add_argument("--scheme", choices=SCHEME_NAMES, default="proposed")
    g = p.add_argument_group("scheme parameters (unset flags keep each scheme's default)")
    g.add_argument("--low", type=int, help="proposed: lower area bound, inclusive (default 5)")
    g.add_argument("--high", type=int, help="proposed: upper area bound, inclusive (default 160)")
    g.add_argument("--se-shape", choices=("square", "disk"),
                   help="structuring element shape (proposed, filtered-dilation, sieve-open)")
    g.add_argument("--se-radius", type=int, help="structuring element radius")
    g.add_argument("--median-window", type=int, help="filtered-dilation: odd median window (default 3)")
    g.add_argument("--area-fraction", type=float, help="heuristic: fraction of largest GT area (default 0.05)")
    g.add_argument("--aspect-min", type=float, help="heuristic: minimum aspect ratio (default 0.2)")
    g.add_argument("--si-min", type=float, help="shape-index: explicit threshold (default: lowest GT shape index)")
    g.add_argument("--area-max", type=int, help="sieve-open: largest kept area (default 2000)")


def _se(args, shape, radius):
    return StructuringElement(args.se_shape or shape, radius if args.se_radius is None else args.se_radius)


def build_scheme(name, args):
    def pick(value, default):
        return default if value is None else value

    if name == "noop":
        return NoOp()
    if name == "proposed":
        return Proposed(pick(args.low, 5), pick(args.high, 160), _se(args, "square", 1))
    if name == "filtered-dilation":
        return FilteredDilation(pick(args.median_window, 3), _se(args, "square", 1))
    if name == "heuristic":
        return HeuristicFiltering(pick(args.area_fraction, 0.05), pick(args.aspect_min, 0.2))
    if name == "shape-index":
        return ShapeIndexFiltering(args.si_min)
    if name == "sieve-open":
        return SieveAndOpen(pick(args.area_max, 2000), _se(args, "disk", 5))
    raise UsageError(f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}")


def _frame_size(mask):
    return mask.shape[1], mask.shape[0]


def cmd_apply(args):
    mask = formats.read_mask(args.input, invert=args.invert)
    spec = build_scheme(args.scheme, args)
    ctx = None
    if args.gt:
        gt = formats.read_ground_truth(args.gt, _frame_size(mask))
        ctx = GroundTruthContext(gt.get(args.frame, []))
    out = apply_scheme(mask, spec, ctx)
    formats.write_mask(out, args.output)
    log.info("%s: %s -> %s", args.scheme, args.input, args.output)
    return 0


def _det_frames(path, invert):
    path = Path(path)
    if path.is_dir():
        frames = formats.list_frames(path)
        if not frames:
            raise FormatError("no frame_*.pbm files found", path=path)
        return {i: formats.read_mask(p, invert=invert) for i, p in frames.items()}
    return None


def cmd_eval(args):
    frames = _det_frames(args.det, args.invert)
    if frames is None:
        mask = formats.read_mask(args.det, invert=args.invert)
        gt = formats.read_ground_truth(args.gt, _frame_size(mask))
        match, m = evaluate_mask(mask, gt.get(args.frame, []))
        row = FrameRow(args.frame, "as-is", match.tp, match.fn, match.fp,
                       m.precision, m.recall, m.fscore, m.pwc)
        if args.format == "json":
            doc = {"frame": args.frame, "tp": match.tp, "fn": match.fn, "fp": match.fp,
                   **{k: round(v, 6) for k, v in m.as_dict().items()}}
            sys.stdout.write(json.dumps(doc, indent=2) + "\n")
        else:
            sys.stdout.write(report_to_csv(EvalReport.from_frames([row])))
        return 0
    size = _frame_size(next(iter(frames.values())))
    gt = formats.read_ground_truth(args.gt, size)
    report = compare(frames, gt, [("as-is", NoOp())])
    sys.stdout.write(report_to_json(report) if args.format == "json" else report_to_csv(report))
    return 0


def cmd_compare(args):
    names = [n.strip() for n in args.schemes.split(",") if n.strip()]
    if not names:
        raise UsageError("--schemes is empty")
    schemes = [(n, build_scheme(n, args)) for n in names]
    paths = formats.list_frames(args.frames_dir)
    if not paths:
        raise FormatError("no frame_*.pbm files found", path=args.frames_dir)
    masks = {i: formats.read_mask(p, invert=args.invert) for i, p in paths.items()}
    gt = formats.read_ground_truth(args.gt, _frame_size(next(iter(masks.values()))))
    report = compare(masks, gt, schemes, jobs=args.jobs)
    fmt = args.format or ("json" if str(args.out).lower().endswith(".json") else "csv")
    write_report(report, args.out, fmt)
    for scheme in names:
        f = report.summary_for(scheme, "fscore")
        log.info("%-18s fscore %.3f +/- %.3f (n=%d)", scheme, f.mean, f.ci95_halfwidth, f.n)
    return 0


def cmd_synth(args):
    cp = CorruptionParams(args.p_miss, args.p_split, args.jitter, args.small_clutter, args.large_clutter)
    params = SceneParams(width=args.width, height=args.height, n_vehicles=args.vehicles,
                         vehicle_area_range=(args.area_min, args.area_max), corruption=cp, seed=args.seed)
    out = Path(args.out_dir)
    (out / "det").mkdir(parents=True, exist_ok=True)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    rects = {}
    for i, scene in enumerate(generate_frames(params, args.frames)):
        formats.write_mask(scene.det_mask, formats.frame_path(out / "det", i))
        formats.write_mask(scene.gt_mask, formats.frame_path(out / "gt", i))
        rects[i] = scene.gt_rects
    formats.write_gt_csv(rects, out / "gt.csv")
    log.info("wrote %d frames to %s", args.frames, out)
    return 0


def cmd_overlay(args):
    mask = formats.read_mask(args.det, invert=args.invert)
    gt = formats.read_ground_truth(args.gt, _frame_size(mask)).get(args.frame, [])
    match, _ = evaluate_mask(mask, gt)
    formats.render_overlay(mask, gt, match, args.out)
    return 0


def make_parser():
    parser = _Parser(prog="wamipost", description="Post-process and evaluate binary vehicle-detection masks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("apply", help="post-process one detection mask")
    _add_scheme_flags(p)
    p.add_argument("--gt", help="ground truth (CSV or mask dir); needed by heuristic and shape-index")
    p.add_argument("--frame", type=int, default=0, help="ground-truth frame to use as context")
    p.add_argument("--invert", action="store_true", help="treat 0 bits as foreground on read")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("eval", help="evaluate detections against ground truth")
    p.add_argument("--det", required=True, help="detection mask or directory of frame_NNNN.pbm")
    p.add_argument("--gt", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--frame", type=int, default=0, help="frame index of a single --det mask")
    p.add_argument("--invert", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="evaluate several schemes over a directory of frames")
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--invert", action="store_true")
    _add_scheme_flags(p, multi=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate synthetic frames and ground truth")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--width", type=int, default=720)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--vehicles", type=int, default=40)
    p.add_argument("--area-min", type=int, default=40)
    p.add_argument("--area-max", type=int, default=150)
    p.add_argument("--p-miss", type=float, default=0.05)
    p.add_argument("--p-split", type=float, default=0.1)
    p.add_argument("--jitter", type=int, default=1)
    p.add_argument("--small-clutter", type=int, default=60)
    p.add_argument("--large-clutter", type=int, default=2)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("overlay", help="color-coded match overlay as a P6 image")
    p.add_argument("--det", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--invert", action="store_true")
    p.set_defaults(func=cmd_overlay)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ParameterError, ContextError, PackingError) as exc:
        print(f"wamipost {args.command}: {exc}", file=sys.stderr)
        return 1
    except (FormatError, DimensionError, ComponentError, OSError) as exc:
        print(f"wamipost {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
