"""Command-line entry point.

    thermedge scale    in.pgm out.pgm [--factor F --offset O]
    thermedge detect   in.pgm out.pgm --kind {prewitt,roberts,sobel,log,canny}
    thermedge pipeline in.pgm out.pgm [--report out.json] [--et N ...]
    thermedge compare  in.pgm outdir --kinds a,b,c

Exit codes: 0 ok, 1 I/O error, 2 configuration error, 3 processing error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .denoise import DENOISER_KINDS, denoise
from .detectors import BASELINE_KINDS, baseline_detect, canny
from .imageio import GrayFrame, PGMError, RawFrame, load_pgm, save_pgm, scale_dpg
from .pipeline import (
    DETECTOR_KINDS,
    ConfigError,
    PipelineConfig,
    PipelineError,
    compare_detectors,
    parse_config_text,
    run_pipeline,
    to_working_frame,
    with_overrides,
)

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_PROCESSING = 0, 1, 2, 3

# command-line flag -> config key
_FLAG_KEYS = {
    "factor": "scale.factor",
    "offset": "scale.offset",
    "low": "canny.low",
    "high": "canny.high",
    "threshold": "baseline_threshold",
    "et": "score.et",
    "gap_link": "link.gap_link",
    "loop_T": "contour.loop_T",
    "phi_loop": "score.phi_loop",
    "phi_line": "score.phi_line",
    "denoiser": "denoiser.kind",
    "R": "glcp.R",
    "theta_obtuse": "glcp.theta_obtuse",
    "smooth_sigma": "glcp.smooth_sigma",
    "gap_fill": "contour.gap_fill_radius",
    "min_length": "contour.min_length",
    "workers": "workers",
}


class _IOFailure(Exception):
    pass


def _to_map_frame(edge_map: np.ndarray) -> GrayFrame:
    return GrayFrame(np.where(edge_map, 255, 0).astype(np.uint8))


def _load(path) -> RawFrame | GrayFrame:
    try:
        return load_pgm(path)
    except (OSError, PGMError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def _save(path, frame) -> None:
    try:
        save_pgm(path, frame)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def build_config(args) -> PipelineConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise _IOFailure(f"cannot read {args.config}: {exc}") from exc
        cfg = with_overrides(cfg, parse_config_text(text))
    flags = {}
    for name, key in _FLAG_KEYS.items():
        value = getattr(args, name, None)
        if value is not None:
            flags[key] = value
    return with_overrides(cfg, flags)


def _cmd_scale(args, cfg: PipelineConfig) -> None:
    frame = _load(args.input)
    if not isinstance(frame, RawFrame):
        raise ConfigError("scale expects a raw (maxval > 255) frame")
    _save(args.output, scale_dpg(frame, cfg.scale))


def _cmd_detect(args, cfg: PipelineConfig) -> None:
    frame = _load(args.input)
    work = to_working_frame(frame, cfg.scale)
    if args.kind == "canny":
        canny_cfg = dataclasses.replace(cfg.canny, denoiser=cfg.denoiser)
        edge_map = canny(work, canny_cfg, workers=cfg.workers)
    else:
        smooth = denoise(work, cfg.denoiser, workers=cfg.workers)
        edge_map = baseline_detect(smooth, args.kind, cfg.baseline_threshold)
    _save(args.output, _to_map_frame(edge_map))


def _cmd_pipeline(args, cfg: PipelineConfig) -> None:
    frame = _load(args.input)
    edge_map, report = run_pipeline(frame, cfg)
    _save(args.output, _to_map_frame(edge_map))
    if args.report:
        _write_text(args.report, report.to_json(indent=1))
    kept = sum(e.kept for e in report.edges)
    print(f"{len(report.edges)} edges, {kept} kept")


def _cmd_compare(args, cfg: PipelineConfig) -> None:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    unknown = [k for k in kinds if k not in DETECTOR_KINDS]
    if unknown or not kinds:
        raise ConfigError(f"unknown detector(s) {unknown}; choose from {DETECTOR_KINDS}")
    frame = _load(args.input)
    results = compare_detectors(frame, kinds, cfg)
    outdir = Path(args.outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _IOFailure(f"cannot create {outdir}: {exc}") from exc
    summary = {}
    for kind, (edge_map, count) in results.items():
        _save(outdir / f"{kind}.pgm", _to_map_frame(edge_map))
        summary[kind] = count
        print(f"{kind:8s} {count:7d} edge pixels")
    _write_text(outdir / "summary.json", json.dumps(summary, indent=1))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--factor", type=float)
    p.add_argument("--offset", type=float)
    p.add_argument("--denoiser", choices=DENOISER_KINDS)
    p.add_argument("--workers", type=int)


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--et", type=int)
    p.add_argument("--gap-link", dest="gap_link", type=float)
    p.add_argument("--loop-T", dest="loop_T", type=float)
    p.add_argument("--phi-loop", dest="phi_loop", type=float)
    p.add_argument("--phi-line", dest="phi_line", type=float)
    p.add_argument("--R", dest="R", type=float)
    p.add_argument("--theta-obtuse", dest="theta_obtuse", type=float)
    p.add_argument("--smooth-sigma", dest="smooth_sigma", type=float)
    p.add_argument("--gap-fill", dest="gap_fill", type=int)
    p.add_argument("--min-length", dest="min_length", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermedge", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scale", help="raw 16-bit frame -> 8-bit frame")
    p.add_argument("input")
    p.add_argument("output")
    _add_common(p)

    p = sub.add_parser("detect", help="single classical detector")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--kind", required=True, choices=BASELINE_KINDS + ("canny",))
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--threshold", type=float)
    _add_common(p)

    p = sub.add_parser("pipeline", help="full smoothness-ranked detector")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--report", help="write the JSON edge report here")
    _add_common(p)
    _add_pipeline_flags(p)

    p = sub.add_parser("compare", help="run several detectors on one frame")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--kinds", default=",".join(DETECTOR_KINDS))
    p.add_argument("--threshold", type=float)
    _add_common(p)
    _add_pipeline_flags(p)
    return parser


_COMMANDS = {
    "scale": _cmd_scale,
    "detect": _cmd_detect,
    "pipeline": _cmd_pipeline,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = build_config(args)
        if (
            args.command == "detect"
            and args.denoiser is None
            and cfg.denoiser == PipelineConfig().denoiser
        ):
            # the stand-alone detectors smooth with the fixed kernel by default
            cfg = dataclasses.replace(cfg, denoiser=cfg.canny.denoiser)
        _COMMANDS[args.command](args, cfg)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"processing error in stage {exc}", file=sys.stderr)
        return EXIT_PROCESSING
    except (ValueError, ArithmeticError) as exc:
        print(f"processing error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
