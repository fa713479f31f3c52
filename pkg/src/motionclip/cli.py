"""Command line interface: ``motionclip <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import keypoints as kp
from .pipeline import (EXIT_INPUT, EXIT_OK, EXIT_TRANSCODER, InputError, PipelineConfig,
                       dump_document, run_analyze, run_batch, run_extract, run_select)
from .transcode import TranscoderError, TranscoderNotFound

log = logging.getLogger("motionclip")

IMAGE_SUFFIXES = {".png", ".ppm", ".pgm", ".pnm"}

# flag name -> (type, help); each maps onto a PipelineConfig field
CONFIG_FLAGS = {
    "joint_index": (int, "joint whose speed drives the analysis (default 0, the nose)"),
    "window_seconds": (float, "length of the extracted window (default 6.0)"),
    "peak_threshold_frames": (int, "peaks narrower than this are dropped (default 3)"),
    "boundary_margin_frames": (int, "snap windows this close to either end (default 10)"),
    "scale_min": (int, "smallest wavelet scale (default 1)"),
    "scale_max": (int, "largest wavelet scale (default 128)"),
    "scale_step": (int, "wavelet scale stride (default 1)"),
    "morlet_omega0": (float, "Morlet centre frequency (default 6.0)"),
    "conf_min": (float, "joints below this confidence are interpolated (default 0.3)"),
    "outlier_factor": (float, "spike threshold as a multiple of the median step (default 5.0)"),
    "codec": (str, "video codec passed to the transcoder (default libx264)"),
    "quality": (int, "constant rate factor (default 23)"),
    "transcoder": (str, "transcoder executable (else $MOTIONCLIP_FFMPEG, else ffmpeg)"),
    "workers": (int, "batch worker threads (default 1)"),
}


def _add_config_flags(p: argparse.ArgumentParser, names=None):
    g = p.add_argument_group("pipeline settings")
    g.add_argument("--config", help="JSON file of pipeline settings")
    for name in names or CONFIG_FLAGS:
        kind, text = CONFIG_FLAGS[name]
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None, help=text)


def _cli_overrides(args) -> dict:
    return {k: getattr(args, k) for k in CONFIG_FLAGS if getattr(args, k, None) is not None}


def _config(args) -> PipelineConfig:
    base = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    try:
        return base.merged(_cli_overrides(args))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def _emit(text: str, path=None):
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_clean(args) -> int:
    cfg = _config(args)
    try:
        seq = kp.load_keypoints(args.keypoints)
        cleaned, report = kp.clean_sequence(seq, cfg.conf_min, cfg.outlier_factor)
    except OSError as exc:
        raise InputError(f"{args.keypoints}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(f"{args.keypoints}: {exc}") from None
    _emit(kp.dump_keypoints(cleaned) + "\n", args.output)
    if args.report:
        _emit(dump_document(report.to_document()), args.report)
    else:
        print(f"interpolated={report.interpolated_count} outliers={report.outlier_count}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    result = run_analyze(args.keypoints, _config(args), energy_csv=args.energy_csv,
                         plot_path=args.plot, velocity_csv_path=args.velocity_csv)
    if not args.energy_csv:
        sys.stdout.write(result.energy.to_csv())
    if args.velocity_plot:
        from .plotting import plot_velocity
        plot_velocity(args.velocity_plot, result.velocity, result.selection)
    return EXIT_OK


def cmd_select(args) -> int:
    selection = run_select(args.keypoints, _config(args), args.output)
    if not args.output:
        sys.stdout.write(dump_document(selection.to_document()))
    return EXIT_OK


def cmd_extract(args) -> int:
    result = run_extract(args.video, args.keypoints, args.output, _config(args))
    sys.stdout.write(dump_document({"selection": result.selection.to_document(),
                                    "sidecar": result.sidecar_path}))
    return EXIT_OK


def cmd_batch(args) -> int:
    base = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    report = run_batch(args.manifest, base, _cli_overrides(args))
    _emit(dump_document(report.to_document()), args.report)
    return report.exit_code


def _load_image(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    if arr.dtype != np.uint8:
        raise InputError(f"{path}: expected an 8-bit image, got {arr.dtype}")
    return arr


def _frame_files(directory) -> dict:
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"{directory}: not a directory")
    return {p.name: p for p in sorted(d.iterdir()) if p.suffix.lower() in IMAGE_SUFFIXES}


def _pck_from_paths(pred_path, gt_path, alpha, conf_min) -> float:
    from .metrics import pck

    try:
        return pck(kp.load_keypoints(pred_path), kp.load_keypoints(gt_path), alpha, conf_min)
    except OSError as exc:
        raise InputError(f"{exc.filename}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"{pred_path} vs {gt_path}: {exc}") from None


def cmd_eval(args) -> int:
    from .metrics import MetricReport, frame_metrics

    pred, gt = _frame_files(args.pred_dir), _frame_files(args.gt_dir)
    if not gt:
        raise InputError(f"{args.gt_dir}: no frame images")
    missing = sorted(set(gt) - set(pred))
    if missing:
        raise InputError(f"{args.pred_dir}: missing frames {', '.join(missing[:5])}")
    frames = []
    for name, gt_path in gt.items():
        try:
            frames.append(frame_metrics(name, _load_image(pred[name]), _load_image(gt_path)))
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from None
    score = None
    if args.pred_keypoints or args.gt_keypoints:
        if not (args.pred_keypoints and args.gt_keypoints):
            raise InputError("--pred-keypoints and --gt-keypoints go together")
        score = _pck_from_paths(args.pred_keypoints, args.gt_keypoints, args.alpha, args.conf_min)
    report = MetricReport.from_frames(frames, score)
    _emit(dump_document(report.to_document()), args.output)
    if args.frames_csv:
        _emit(report.frames_csv(), args.frames_csv)
    return EXIT_OK


def cmd_eval_pck(args) -> int:
    score = _pck_from_paths(args.pred, args.gt, args.alpha, args.conf_min)
    _emit(dump_document({"pck": score, "alpha": args.alpha}), args.output)
    return EXIT_OK


def cmd_rope_selfcheck(args) -> int:
    from .rope_check import format_report, selfcheck

    results = selfcheck(args.seed)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_INPUT


def cmd_rope_dump(args) -> int:
    from .rope import FrequencyLayout, slf_scale
    from .rope_check import frequency_csv

    try:
        layout = FrequencyLayout(args.head_dim, tuple(args.pair_counts) if args.pair_counts else None,
                                 args.base, args.alpha, args.motion_scale, args.space_scale_factor)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    for note in slf_scale(layout).notes:
        log.warning(note)
    _emit(frequency_csv(layout), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionclip", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="interpolate gaps and drop spikes in a keypoint document")
    p.add_argument("keypoints")
    p.add_argument("-o", "--output", help="cleaned document (default stdout)")
    p.add_argument("--report", help="write the cleaning tallies as JSON")
    _add_config_flags(p, ["conf_min", "outlier_factor"])
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("analyze", help="wavelet energy series of one keypoint document")
    p.add_argument("keypoints")
    p.add_argument("--energy-csv", help="sample_index,raw,filtered (default stdout)")
    p.add_argument("--velocity-csv", help="frame_index,velocity")
    p.add_argument("--plot", help="SVG of the energy with the selected window shaded")
    p.add_argument("--velocity-plot", help="SVG of the joint speed")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("select-window", help="most energetic window of one keypoint document")
    p.add_argument("keypoints")
    p.add_argument("-o", "--output", help="selection JSON (default stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("extract", help="cut the selected window out of a video")
    p.add_argument("video")
    p.add_argument("keypoints")
    p.add_argument("output")
    _add_config_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("batch", help="run a newline-delimited manifest")
    p.add_argument("manifest")
    p.add_argument("--report", help="summary JSON (default stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="PSNR, SSIM, L1 (and PCK) between frame directories")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--pred-keypoints")
    p.add_argument("--gt-keypoints")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--conf-min", type=float, default=kp.DEFAULT_CONF_MIN)
    p.add_argument("-o", "--output", help="report JSON (default stdout)")
    p.add_argument("--frames-csv", help="per-frame metrics")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-pck", help="PCK between two keypoint documents")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--conf-min", type=float, default=kp.DEFAULT_CONF_MIN)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval_pck)

    rope = sub.add_parser("rope", help="rotary embedding utilities")
    rsub = rope.add_subparsers(dest="rope_command", required=True)
    p = rsub.add_parser("selfcheck", help="randomized invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rope_selfcheck)
    p = rsub.add_parser("dump-freqs", help="per-axis frequencies before and after scaling")
    p.add_argument("--head-dim", type=int, default=128)
    p.add_argument("--pair-counts", type=int, nargs=3, metavar=("T", "H", "W"))
    p.add_argument("--base", type=float, default=10000.0)
    p.add_argument("--alpha", type=float, default=0.30)
    p.add_argument("--motion-scale", type=float, default=1.5)
    p.add_argument("--space-scale-factor", type=float, default=0.02)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_rope_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TranscoderNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSCODER
    except TranscoderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.stderr:
            print(exc.stderr.rstrip(), file=sys.stderr)
        return EXIT_TRANSCODER
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
