"""Smoothness-ranked edge detection for noisy thermal-infrared frames."""

from .contours import Contour, ContourSet, extract_contours
from .corners import Corner, GlcpParams, detect_corners
from .denoise import DenoiserSpec, denoise, gaussian_kernel, nl_means
from .detectors import CannyConfig, baseline_detect, canny
from .imageio import GrayFrame, RawFrame, ScaleConfig, load_pgm, read_pgm, save_pgm, scale_dpg, write_pgm
from .linking import EdgeGraph, LinkConfig, link_edges
from .pipeline import (
    ContourConfig,
    EdgeReport,
    PipelineConfig,
    compare_detectors,
    render_edges,
    run_pipeline,
)
from .scoring import ScoreConfig, fit_cubic, rank_and_filter, score_edges

__version__ = "0.1.0"

__all__ = [
    "CannyConfig", "Contour", "ContourConfig", "ContourSet", "Corner", "DenoiserSpec",
    "EdgeGraph", "EdgeReport", "GlcpParams", "GrayFrame", "LinkConfig", "PipelineConfig",
    "RawFrame", "ScaleConfig", "ScoreConfig", "baseline_detect", "canny", "compare_detectors",
    "denoise", "detect_corners", "extract_contours", "fit_cubic", "gaussian_kernel",
    "link_edges", "load_pgm", "nl_means", "rank_and_filter", "read_pgm", "render_edges",
    "run_pipeline", "save_pgm", "scale_dpg", "score_edges", "write_pgm",
]
