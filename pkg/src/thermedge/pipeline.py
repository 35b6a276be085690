"""End-to-end smoothness-ranked edge detector and the detector comparison."""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .contours import ContourSet, extract_contours, render_contours
from .corners import GlcpParams, detect_corners
from .denoise import DenoiserSpec, denoise
from .detectors import BASELINE_KINDS, EIGHT, CannyConfig, baseline_detect, canny
from .imageio import GrayFrame, RawFrame, ScaleConfig, scale_dpg
from .linking import EdgeGraph, LinkConfig, link_edges
from .scoring import ScoreConfig, ScoredEdge, rank_and_filter, score_edges

DETECTOR_KINDS = BASELINE_KINDS + ("canny", "proposed")

_NO_DENOISE = DenoiserSpec()


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ContourConfig:
    gap_fill_radius: int = 2
    min_length: int = 5
    loop_T: float = 3.0

    def __post_init__(self):
        if self.gap_fill_radius < 0 or self.min_length < 1 or self.loop_T <= 0:
            raise ValueError("invalid contour settings")


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the detector.

    The frame is denoised once with ``denoiser``; the Canny stage then runs
    without further smoothing, so ``canny.denoiser`` is ignored here.
    ``baseline_threshold`` only matters to the comparison.
    """

    scale: ScaleConfig = field(default_factory=ScaleConfig)
    denoiser: DenoiserSpec = field(default_factory=DenoiserSpec.nlmeans)
    canny: CannyConfig = field(default_factory=CannyConfig)
    glcp: GlcpParams = field(default_factory=GlcpParams)
    link: LinkConfig = field(default_factory=LinkConfig)
    score: ScoreConfig = field(default_factory=ScoreConfig)
    contour: ContourConfig = field(default_factory=ContourConfig)
    baseline_threshold: float = 0.2
    workers: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EdgeRecord:
    id: int
    n: int
    m: int
    nprime: int
    phi: float
    rss: float
    ar: float
    es: float
    rank: int
    kept: bool
    mode: str
    points: list
    corners: list

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class EdgeReport:
    config: dict
    edges: list[EdgeRecord]
    timings_ms: dict[str, float] = field(default_factory=dict)
    adjacency: list[list[int]] = field(default_factory=list)

    def to_dict(self, with_timings: bool = True) -> dict:
        out = {
            "config": self.config,
            "edges": [e.to_dict() for e in self.edges],
            "adjacency": self.adjacency,
        }
        if with_timings:
            out["timings_ms"] = self.timings_ms
        return out

    def to_json(self, with_timings: bool = True, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(with_timings), indent=indent)


@dataclass
class PipelineResult:
    """Everything a run produced, for callers that need more than the map."""

    edge_map: np.ndarray
    report: EdgeReport
    canny_map: np.ndarray
    contours: ContourSet
    graph: EdgeGraph
    scored: list[ScoredEdge]
    kept: list[int]


class _Stages:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kwargs)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
        self.timings[name] = (time.perf_counter() - t0) * 1000.0
        return out


def to_working_frame(frame, scale: ScaleConfig = ScaleConfig()) -> np.ndarray:
    """Float image for processing; raw frames are DPG-scaled first."""
    if isinstance(frame, RawFrame):
        frame = scale_dpg(frame, scale)
    if isinstance(frame, GrayFrame):
        return frame.data.astype(np.float64)
    return np.asarray(frame, dtype=np.float64)


def render_edges(graph: EdgeGraph, kept, dims: tuple[int, int]) -> np.ndarray:
    """Binary map (``dims = (width, height)``) with exactly the kept edges set."""
    width, height = dims
    n = len(graph.edges.contours)
    chosen = []
    for i in kept:
        if not 0 <= i < n:
            raise IndexError(f"edge index {i} out of range for {n} edges")
        chosen.append(graph.edges.contours[i])
    return render_contours(chosen, width, height)


def _from_smoothed(smooth: np.ndarray, cfg: PipelineConfig, stages: _Stages) -> PipelineResult:
    h, w = smooth.shape
    canny_cfg = dataclasses.replace(cfg.canny, denoiser=_NO_DENOISE)
    cmap = stages.run("canny", canny, smooth, canny_cfg)
    cc = cfg.contour
    cset = stages.run(
        "contours", extract_contours, cmap, cc.gap_fill_radius, cc.min_length, cc.loop_T
    )
    corners = stages.run("corners", detect_corners, cset, cfg.glcp)
    graph = stages.run("linking", link_edges, cset, corners, cfg.link)
    scored = stages.run("scoring", score_edges, graph, cfg.score)
    ranked = stages.run("ranking", rank_and_filter, scored, cfg.score.et)
    kept = [s.edge_index for s in ranked]
    edge_map = stages.run("render", render_edges, graph, kept, (w, h))

    order = sorted(scored, key=lambda s: (s.es, s.edge_index))
    rank_of = {s.edge_index: r + 1 for r, s in enumerate(order)}
    kept_set = set(kept)
    by_edge: dict[int, list] = {}
    for c in graph.corners:
        by_edge.setdefault(c.contour_index, []).append(
            {"point_index": c.point_index, "angle": c.angle, "kind": c.kind}
        )
    records = []
    for s in scored:
        edge = graph.edges.contours[s.edge_index]
        records.append(
            EdgeRecord(
                id=s.edge_index,
                n=s.n,
                m=s.m,
                nprime=s.nprime,
                phi=s.phi,
                rss=s.rss,
                ar=s.ar,
                es=s.es,
                rank=rank_of[s.edge_index],
                kept=s.edge_index in kept_set,
                mode=s.mode,
                points=edge.points.tolist(),
                corners=by_edge.get(s.edge_index, []),
            )
        )
    report = EdgeReport(
        config=cfg.to_dict(),
        edges=records,
        timings_ms=stages.timings,
        adjacency=[sorted(a) for a in graph.adjacency],
    )
    return PipelineResult(edge_map, report, cmap, cset, graph, scored, kept)


def run_pipeline_full(frame, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    stages = _Stages()
    work = stages.run("scale", to_working_frame, frame, cfg.scale)
    if min(work.shape) < 3:
        raise PipelineError("scale", ValueError("frame must be at least 3x3"))
    smooth = stages.run("denoise", denoise, work, cfg.denoiser, cfg.workers)
    return _from_smoothed(smooth, cfg, stages)


def run_pipeline(frame, cfg: PipelineConfig = PipelineConfig()) -> tuple[np.ndarray, EdgeReport]:
    """Scale (raw input only), denoise, Canny, contours, corners, link, score,
    rank and keep the ``cfg.score.et`` strongest edges."""
    res = run_pipeline_full(frame, cfg)
    return res.edge_map, res.report


def count_components(edge_map: np.ndarray) -> int:
    """Number of 8-connected components in a binary map."""
    return int(ndimage.label(np.asarray(edge_map, dtype=bool), structure=EIGHT)[1])


def compare_detectors(frame, kinds, cfg: PipelineConfig = PipelineConfig()) -> dict:
    """Run each detector on the same denoised frame.

    Returns ``{kind: (edge_map, edge_pixel_count)}`` in the order requested.
    """
    kinds = list(kinds)
    for k in kinds:
        if k not in DETECTOR_KINDS:
            raise ValueError(f"unknown detector {k!r}; choose from {DETECTOR_KINDS}")
    work = to_working_frame(frame, cfg.scale)
    smooth = denoise(work, cfg.denoiser, workers=cfg.workers)
    out = {}
    for k in kinds:
        if k == "canny":
            emap = canny(smooth, dataclasses.replace(cfg.canny, denoiser=_NO_DENOISE))
        elif k == "proposed":
            emap = _from_smoothed(smooth, cfg, _Stages()).edge_map
        else:
            emap = baseline_detect(smooth, k, cfg.baseline_threshold)
        out[k] = (emap, int(np.count_nonzero(emap)))
    return out


class ConfigError(ValueError):
    """Bad configuration key or value."""


def _coerce(text, current):
    if not isinstance(text, str):
        return text
    t = text.strip()
    if current is None or isinstance(current, float):
        if t.lower() in ("none", "null", ""):
            return None
        return float(t)
    if isinstance(current, bool):
        if t.lower() in ("1", "true", "yes", "on"):
            return True
        if t.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(current, int):
        return int(t)
    return t


def _set_path(obj, path: list[str], value):
    name = path[0]
    if not dataclasses.is_dataclass(obj) or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"unknown config key {name!r}")
    current = getattr(obj, name)
    if len(path) > 1:
        return dataclasses.replace(obj, **{name: _set_path(current, path[1:], value)})
    if dataclasses.is_dataclass(current):
        raise ConfigError(f"{name!r} is a section; set one of its fields")
    return dataclasses.replace(obj, **{name: _coerce(value, current)})


def with_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Apply ``{"section.field": value}`` overrides (strings are coerced to
    the type of the current value). Validation errors become ConfigError."""
    for key, value in overrides.items():
        try:
            cfg = _set_path(cfg, key.split("."), value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    return cfg


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out
