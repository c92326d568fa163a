"""Command-line entry point.

    visdiag evaluate GT.json PRED.json --out DIR
    visdiag synth GT.json SPEC.json --out DIR

Exit codes: 0 success, 1 internal error, 2 input validation failure.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .config import EvalConfig, RangeBins, iou_sweep
from .dataset import dump_predictions, load, load_ground_truth, validate, Dataset
from .exceptions import DatasetError, PerturbError, VisDiagError

log = logging.getLogger("visdiag")

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2
THREADS_ENV = "VISDIAG_THREADS"


def _sweep(text):
    try:
        lo, step, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:step:hi, e.g. 0.5:0.05:0.95") from None
    return iou_sweep(lo, step, hi)


def _edges(text):
    try:
        return RangeBins.from_edges([int(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _formats(text):
    fmts = {x.strip() for x in text.split(",") if x.strip()}
    bad = fmts - {"json", "csv", "svg"}
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(sorted(bad))}")
    return fmts


def _default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser():
    p = argparse.ArgumentParser(prog="visdiag", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score predictions and analyse their errors")
    ev.add_argument("gt")
    ev.add_argument("pred")
    ev.add_argument("--thr-f", type=float, default=0.5)
    ev.add_argument("--thr-b", type=float, default=0.1)
    ev.add_argument("--thr-spat", type=float, default=0.1)
    ev.add_argument("--thr-temp", type=float, default=0.7)
    ev.add_argument("--iou-sweep", type=_sweep, default=iou_sweep(), metavar="LO:STEP:HI")
    ev.add_argument("--max-dets", type=int, default=100, metavar="N")
    ev.add_argument("--range-bins", type=_edges, default=RangeBins(), metavar="A,B,C")
    ev.add_argument("--temporal-length-mode", choices=("visible", "extent"), default="visible")
    ev.add_argument("--temporal-union-mode", choices=("frames", "extent"), default="frames")
    ev.add_argument("--weight-sweep", type=_sweep, default=(), metavar="LO:STEP:HI",
                    help="also report weights at these IoU thresholds")
    ev.add_argument("--out", default="visdiag_out", metavar="DIR")
    ev.add_argument("--format", type=_formats, default={"json", "csv", "svg"})
    ev.add_argument("--threads", type=int, default=None, metavar="N")
    ev.add_argument("--deterministic", action="store_true",
                    help="accepted for compatibility; outputs never carry timestamps")
    ev.add_argument("--quiet", action="store_true")

    sy = sub.add_parser("synth", help="inject known errors into ground truth")
    sy.add_argument("gt")
    sy.add_argument("spec")
    sy.add_argument("--out", default="visdiag_synth", metavar="DIR")
    sy.add_argument("--seed", type=int, default=None, metavar="N")
    sy.add_argument("--thr-f", type=float, default=0.5)
    sy.add_argument("--thr-b", type=float, default=0.1)
    sy.add_argument("--thr-spat", type=float, default=0.1)
    sy.add_argument("--thr-temp", type=float, default=0.7)
    return p


def _config(args):
    max_dets = tuple(d for d in (1, 10) if d < args.max_dets) + (args.max_dets,)
    return EvalConfig(
        thr_f=args.thr_f,
        thr_b=args.thr_b,
        thr_spat=args.thr_spat,
        thr_temp=args.thr_temp,
        iou_thresholds=args.iou_sweep,
        max_dets=max_dets,
        range_bins=args.range_bins,
        temporal_length_mode=args.temporal_length_mode,
        temporal_union_mode=args.temporal_union_mode,
        weight_thresholds=tuple(args.weight_sweep),
    )


def cmd_evaluate(args):
    from .analysis import analyze
    from .report import terminal_table, write_bundle

    try:
        config = _config(args)
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        dataset = load(args.gt, args.pred)
    except DatasetError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    report = validate(dataset)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    for w in report.warnings:
        log.warning(w)
    threads = args.threads or _default_threads()
    t0 = time.perf_counter()
    analysis = analyze(dataset, config, threads)
    fix_all = analysis.weights.fix_all_ap50
    if fix_all is not None and fix_all < 100.0 - 1e-6:
        log.error("AP@50 after fixing every error is %.6f, not 100: taxonomy does not cover "
                  "every error", fix_all)
    summary = write_bundle(analysis, args.out, args.format, {"gt": args.gt, "pred": args.pred})
    log.info("analysis finished in %.2fs", time.perf_counter() - t0)
    if not args.quiet:
        print(terminal_table(summary))
    return EXIT_OK


def cmd_synth(args):
    from .synth import PerturbSpec, perturb

    try:
        videos, categories, gts = load_ground_truth(args.gt)
        with open(args.spec) as fh:
            spec = PerturbSpec.from_json(json.load(fh))
        config = EvalConfig(thr_f=args.thr_f, thr_b=args.thr_b,
                            thr_spat=args.thr_spat, thr_temp=args.thr_temp)
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DatasetError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        spec.seed = args.seed
    try:
        result = perturb(Dataset(videos, categories, gts), spec, config)
    except PerturbError as exc:
        print(f"cannot realize spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "predictions.json").write_text(
        json.dumps(dump_predictions(result.predictions), sort_keys=True, separators=(",", ":"))
    )
    (out / "census.json").write_text(json.dumps(result.census_json(), sort_keys=True, indent=1) + "\n")
    print(f"wrote {len(result.predictions)} predictions to {out / 'predictions.json'}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "evaluate":
            return cmd_evaluate(args)
        return cmd_synth(args)
    except VisDiagError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
