"""Command-line entry point: ``fatratio <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or algorithm error. Results go
to stdout (JSON by default), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bench import PipelineConfig, run_bench
from .errors import FatRatioError, InvalidConfigError
from .fatseg import SweepConfig, binarize, classify_by_ratio, measure_images, sweep
from .metrics import (
    batch_classify_eval,
    classification_metrics,
    overlap,
    read_label_csv,
    summarize,
)
from .phantom import (
    Blob,
    PhantomSpec,
    generate_phantom,
    pack_blobs,
    table_artifacts,
)
from .preprocess import MorphologyConfig, ThresholdConfig, open_mask, threshold_fat
from .scoring import ScoringParams, aggregate_ptb, compute_scores, read_ptb_csv
from .volume_io import BinaryMask, SliceSelector, load_mask, load_volume, save_volume, slice_image, stack_images

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    threshold: ThresholdConfig
    morphology: MorphologyConfig
    sweep: SweepConfig
    scoring: ScoringParams
    selector: SliceSelector
    fmt: str = "json"
    parallel: int = 1


def _pair(text: str, kind=int) -> tuple:
    try:
        a, b = (kind(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}") from None
    return a, b


def _blob(text: str) -> Blob:
    try:
        x, y, r = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,r, got {text!r}") from None
    return Blob(x, y, r)


def _add_threshold(p):
    g = p.add_argument_group("fat mask")
    g.add_argument("--hu-min", type=int, default=-150, help="lower HU bound, inclusive (default -150)")
    g.add_argument("--hu-max", type=int, default=0, help="upper HU bound, inclusive (default 0)")
    g.add_argument("--no-opening", action="store_true", help="skip the erosion/dilation cleanup")


def _add_sweep(p):
    g = p.add_argument_group("sweep")
    g.add_argument("--granular-degree", type=float, default=0.05, help="angular step in degrees (default 0.05)")
    g.add_argument("--center", type=_pair, default=None, metavar="X,Y", help="sweep center (default image center)")
    g.add_argument("--ray-length", choices=("diagonal", "half-extent"), default="diagonal")
    g.add_argument("--faithful-degrees", action="store_true",
                   help="weight sectors by the step in degrees, as in the original pseudocode")
    g.add_argument("--boundary", choices=("edge", "pixel"), default="edge",
                   help="boundary position: pixel edge (default) or hit pixel center")
    g.add_argument("--slices", default=None, metavar="Z|Z0:Z1", help="axial slice or inclusive range (default all)")
    g.add_argument("--mask-input", action="store_true", help="input is already a binary fat mask")
    g.add_argument("--parallel", type=int, default=1, help="worker threads (default 1)")


def _add_format(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_scoring(p):
    g = p.add_argument_group("scoring")
    g.add_argument("--coef-a", type=float, default=1.0)
    g.add_argument("--coef-b", type=float, default=1.0)
    g.add_argument("--stride", type=int, default=10, help="keep slices with index %% stride == 0 (default 10)")
    g.add_argument("--ptb-csv", type=Path, default=None, help="slice_index,prob rows")
    g.add_argument("--strict-ptb", action="store_true", help="require at least three probabilities")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fatratio", description="Visceral/subcutaneous fat ratio from CT volumes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mask", help="threshold + opening -> binary fat mask")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    _add_threshold(p)

    p = sub.add_parser("segment", help="subcutaneous fat mask from the polar sweep")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--trace", type=Path, default=None, help="write the per-ray sweep trace as CSV")
    p.add_argument("--close-gaps", action="store_true", help="3x3 closing of the output mask (display only)")
    _add_threshold(p)
    _add_sweep(p)

    p = sub.add_parser("ratio", help="visceral/subcutaneous fat ratio and CD/ITB label")
    p.add_argument("input", type=Path)
    _add_threshold(p)
    _add_sweep(p)
    _add_format(p)

    p = sub.add_parser("score", help="combined Crohn/TB scores")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ratio", type=float, help="precomputed fat ratio")
    src.add_argument("--input", type=Path, help="volume to run the ratio pipeline on")
    _add_threshold(p)
    _add_sweep(p)
    _add_scoring(p)
    _add_format(p)

    p = sub.add_parser("compare", help="Dice/Jaccard between two masks")
    p.add_argument("mask_a", type=Path)
    p.add_argument("mask_b", type=Path)
    p.add_argument("--per-slice", action="store_true", help="also report per-slice mean±std")
    _add_format(p)

    p = sub.add_parser("metrics", help="classification metrics from prediction/truth CSVs")
    p.add_argument("predictions", type=Path)
    p.add_argument("truth", type=Path)
    p.add_argument("--positive", choices=("CD", "ITB"), default="CD")
    _add_format(p)

    p = sub.add_parser("phantom", help="write a synthetic phantom and its truth sidecar")
    p.add_argument("output", type=Path)
    p.add_argument("--truth", type=Path, default=None, help="sidecar path (default <output>.json)")
    p.add_argument("--size", type=int, nargs=2, default=(512, 512), metavar=("W", "H"))
    p.add_argument("--n-slices", type=int, default=1)
    p.add_argument("--ring", type=float, nargs=2, default=(50.0, 100.0), metavar=("R_IN", "R_OUT"))
    p.add_argument("--blob", type=_blob, action="append", default=[], metavar="X,Y,R")
    p.add_argument("--target-ratio", type=float, default=None, help="pack blobs to reach this ratio")
    p.add_argument("--artifacts", type=int, default=0, help="number of 1-px table lines under the body")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian HU noise sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", type=float, nargs=3, default=(1.0, 1.0, 1.0))

    p = sub.add_parser("bench", help="per-stage pipeline timings")
    p.add_argument("input", type=Path)
    p.add_argument("--repetitions", type=int, default=5)
    _add_threshold(p)
    _add_sweep(p)
    return parser


def make_config(args) -> RunConfig:
    """Validate flags into typed configs; raises UsageError on inconsistent flags."""
    try:
        thr = ThresholdConfig(getattr(args, "hu_min", -150), getattr(args, "hu_max", 0))
        morph = MorphologyConfig.disabled() if getattr(args, "no_opening", False) else MorphologyConfig()
        sweep_cfg = SweepConfig(
            granular_degree=getattr(args, "granular_degree", 0.05),
            center=getattr(args, "center", None),
            ray_length=getattr(args, "ray_length", "diagonal"),
            faithful_degrees=getattr(args, "faithful_degrees", False),
            boundary=getattr(args, "boundary", "edge"),
            close_gaps=getattr(args, "close_gaps", False),
        )
        scoring = ScoringParams(getattr(args, "coef_a", 1.0), getattr(args, "coef_b", 1.0))
        selector = SliceSelector.parse(getattr(args, "slices", None))
    except InvalidConfigError as exc:
        raise UsageError(str(exc)) from None
    parallel = getattr(args, "parallel", 1)
    if parallel < 1:
        raise UsageError("--parallel must be >= 1")
    if getattr(args, "stride", 1) < 1:
        raise UsageError("--stride must be >= 1")
    return RunConfig(args.command, thr, morph, sweep_cfg, scoring, selector,
                     getattr(args, "format", "json"), parallel)


def _emit(obj: dict, fmt: str = "json", out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(obj, indent=2) + "\n")
        return
    flat = {}
    for k, v in obj.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat[f"{k}.{kk}"] = vv
        elif isinstance(v, (list, tuple)):
            flat[k] = ";".join(str(x) for x in v)
        else:
            flat[k] = v
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(flat.keys())
    w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in flat.values()])
    out.write(buf.getvalue())


def _fat_images(args, cfg: RunConfig):
    """Binary row-major fat images and their slice indices for the selected slices."""
    if args.mask_input:
        m = load_mask(args.input)
        idx = list(cfg.selector.indices(m.data.shape[2]))
        return [slice_image(m, z) for z in idx], idx, m.spacing_mm
    vol = load_volume(args.input)
    idx = list(cfg.selector.indices(vol.nz))
    return binarize(vol, cfg.threshold, cfg.morphology, idx), idx, vol.spacing_mm


def _measure(args, cfg: RunConfig) -> dict:
    images, idx, spacing = _fat_images(args, cfg)
    m = measure_images(images, cfg.sweep, spacing=spacing, slice_ids=idx, parallel=cfg.parallel)
    out = {"mode": "2d" if len(idx) == 1 else "3d", **m.to_dict()}
    out["label"] = classify_by_ratio(m.ratio).value
    return out


def cmd_mask(args, cfg: RunConfig) -> int:
    vol = load_volume(args.input)
    mask = open_mask(threshold_fat(vol, cfg.threshold), cfg.morphology)
    save_volume(mask, args.output)
    _emit({"output": str(args.output), "foreground": mask.count, "shape": list(mask.shape)})
    return 0


def cmd_segment(args, cfg: RunConfig) -> int:
    images, idx, spacing = _fat_images(args, cfg)
    masks, per_slice = [], []
    trace_fh = open(args.trace, "w", newline="") if args.trace else None
    try:
        for k, (z, img) in enumerate(zip(idx, images)):
            area, trace, canvas = sweep(img, cfg.sweep, want_mask=True, parallel=cfg.parallel)
            masks.append(canvas)
            per_slice.append({"z": z, "subcut_area": area, "mask_pixels": int(np.count_nonzero(canvas))})
            if trace_fh:
                trace.write_csv(trace_fh, z=z, header=k == 0)
    finally:
        if trace_fh:
            trace_fh.close()
    save_volume(BinaryMask(stack_images(masks), spacing), args.output)
    _emit({
        "output": str(args.output),
        "subcut_area": sum(s["subcut_area"] for s in per_slice),
        "mask_pixels": sum(s["mask_pixels"] for s in per_slice),
        "slices": per_slice,
    })
    return 0


def cmd_ratio(args, cfg: RunConfig) -> int:
    _emit(_measure(args, cfg), cfg.fmt)
    return 0


def cmd_score(args, cfg: RunConfig) -> int:
    if args.input is not None:
        args.mask_input = getattr(args, "mask_input", False)
        ratio = _measure(args, cfg)["ratio"]
    else:
        ratio = args.ratio
    p_ptb = 0.0
    if args.ptb_csv is not None:
        series = read_ptb_csv(args.ptb_csv, args.stride)
        if series.probs:
            p_ptb = aggregate_ptb(series, strict=args.strict_ptb)
    result = compute_scores(ratio, p_ptb, cfg.scoring)
    _emit(result.to_dict(), cfg.fmt)
    return 0


def cmd_compare(args, cfg: RunConfig) -> int:
    a, b = load_mask(args.mask_a), load_mask(args.mask_b)
    out = overlap(a, b).to_dict()
    if args.per_slice:
        reports = [overlap(a.data[:, :, z], b.data[:, :, z]) for z in range(a.data.shape[2])]
        out["per_slice"] = {
            "dice": summarize([r.dice for r in reports]),
            "jaccard": summarize([r.jaccard for r in reports]),
        }
    _emit(out, cfg.fmt)
    return 0


def cmd_metrics(args, cfg: RunConfig) -> int:
    pred, truth = read_label_csv(args.predictions), read_label_csv(args.truth)
    missing = sorted(set(pred) ^ set(truth))
    if missing:
        raise FatRatioError(f"case ids present in only one file: {', '.join(missing[:5])}")
    cases = sorted(truth)
    c = batch_classify_eval([pred[k] for k in cases], [truth[k] for k in cases], args.positive)
    out = {"positive": args.positive, "n": c.total, "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}
    out.update(classification_metrics(c))
    _emit(out, cfg.fmt)
    return 0


def cmd_phantom(args, cfg: RunConfig) -> int:
    r_in, r_out = args.ring
    spec = PhantomSpec(
        width=args.size[0], height=args.size[1], n_slices=args.n_slices,
        ring_inner=(r_in, r_in), ring_outer=(r_out, r_out),
        blobs=tuple(args.blob), noise_sigma=args.noise, seed=args.seed,
        spacing_mm=tuple(args.spacing),
    )
    if args.target_ratio is not None:
        if args.blob:
            raise UsageError("--target-ratio and --blob are mutually exclusive")
        spec = spec.with_(blobs=pack_blobs(args.target_ratio, spec))
    if args.artifacts:
        spec = spec.with_(artifact_lines=table_artifacts(spec, args.artifacts))
    vol, truth = generate_phantom(spec)
    save_volume(vol, args.output)
    truth_path = args.truth or Path(str(args.output) + ".json")
    truth_path.write_text(json.dumps(truth.to_dict(), indent=2) + "\n")
    _emit({"output": str(args.output), "truth": str(truth_path), "true_ratio": truth.true_ratio,
           "raster_ratio": truth.raster_ratio})
    return 0


def cmd_bench(args, cfg: RunConfig) -> int:
    if args.repetitions < 3:
        raise UsageError("--repetitions must be >= 3")
    pipe = PipelineConfig(cfg.threshold, cfg.morphology, cfg.sweep, cfg.selector, cfg.parallel)
    _emit(run_bench(args.input, pipe, args.repetitions).to_dict())
    return 0


COMMANDS = {
    "mask": cmd_mask,
    "segment": cmd_segment,
    "ratio": cmd_ratio,
    "score": cmd_score,
    "compare": cmd_compare,
    "metrics": cmd_metrics,
    "phantom": cmd_phantom,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"fatratio {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FatRatioError, OSError) as exc:
        print(f"fatratio {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
