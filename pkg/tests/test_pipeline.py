import dataclasses
import json

import numpy as np
import pytest
from scipy import ndimage

import thermedge.pipeline as pl
from thermedge.contours import Contour, ContourSet, extract_contours
from thermedge.corners import detect_corners
from thermedge.denoise import DenoiserSpec, denoise
from thermedge.detectors import EIGHT, CannyConfig, canny
from thermedge.imageio import GrayFrame, RawFrame, scale_dpg
from thermedge.linking import EdgeGraph, link_edges
from thermedge.pipeline import (
    ConfigError,
    ContourConfig,
    PipelineConfig,
    PipelineError,
    compare_detectors,
    count_components,
    parse_config_text,
    render_edges,
    run_pipeline,
    run_pipeline_full,
    with_overrides,
)
from thermedge.scoring import ScoreConfig, rank_and_filter, score_edges
from thermedge.synthetic import rectangle_scene

KEEP_ONE = PipelineConfig(score=ScoreConfig(et=1))


@pytest.fixture(scope="module")
def scene():
    return rectangle_scene(noise_sigma=20, seed=3)


@pytest.fixture(scope="module")
def scene_result(scene):
    return run_pipeline_full(scene[0], KEEP_ONE)


def iou(a, b):
    return (a & b).sum() / (a | b).sum()


def test_rectangle_ranked_first(scene, scene_result):
    _, truth = scene
    top = min(scene_result.report.edges, key=lambda e: e.rank)
    assert top.rank == 1 and top.kept
    pts = np.array(top.points)
    assert truth[pts[:, 1], pts[:, 0]].mean() > 0.9
    covered = np.zeros_like(truth)
    covered[pts[:, 1], pts[:, 0]] = True
    assert (covered & truth).sum() >= 0.95 * truth.sum()
    assert iou(scene_result.edge_map, truth) >= 0.8


def test_constant_frame_gives_empty_output():
    edge_map, report = run_pipeline(RawFrame(np.full((30, 40), 5000)))
    assert not edge_map.any() and report.edges == []
    assert edge_map.shape == (30, 40)


def test_deterministic(scene):
    a_map, a = run_pipeline(scene[0], KEEP_ONE)
    b_map, b = run_pipeline(scene[0], KEEP_ONE)
    assert np.array_equal(a_map, b_map)
    assert a.to_json(with_timings=False) == b.to_json(with_timings=False)


def test_matches_manual_chaining(scene, scene_result):
    cfg = KEEP_ONE
    smooth = denoise(scale_dpg(scene[0], cfg.scale).data.astype(float), cfg.denoiser)
    cmap = canny(smooth, dataclasses.replace(cfg.canny, denoiser=DenoiserSpec()))
    cset = extract_contours(cmap, 2, 5, 3.0)
    graph = link_edges(cset, detect_corners(cset, cfg.glcp), cfg.link)
    kept = [s.edge_index for s in rank_and_filter(score_edges(graph, cfg.score), 1)]
    assert np.array_equal(render_edges(graph, kept, (200, 150)), scene_result.edge_map)
    assert np.array_equal(cmap, scene_result.canny_map)


def test_gray_input_skips_scaling(scene):
    gray = scale_dpg(scene[0])
    a_map, a = run_pipeline(gray, KEEP_ONE)
    b_map, b = run_pipeline(scene[0], KEEP_ONE)
    assert np.array_equal(a_map, b_map)
    assert [e.es for e in a.edges] == [e.es for e in b.edges]


def test_report_consistency():
    frame, _ = rectangle_scene(noise_sigma=25, seed=1)
    cfg = PipelineConfig(denoiser=DenoiserSpec.gaussian(), score=ScoreConfig(et=7))
    _, report = run_pipeline(frame, cfg)
    ranks = sorted(e.rank for e in report.edges)
    assert ranks == list(range(1, len(report.edges) + 1))
    assert sum(e.kept for e in report.edges) == min(7, len(report.edges))
    assert all(e.kept == (e.rank <= 7) for e in report.edges)
    for e in report.edges:
        assert e.n == len(e.points) and e.m >= 2 and e.nprime >= e.n
        assert e.ar == pytest.approx(e.rss / e.n) and e.es >= 0
    doc = json.loads(report.to_json())
    assert set(doc) >= {"config", "timings_ms", "edges"}
    assert set(doc["edges"][0]) >= {
        "id", "n", "m", "nprime", "phi", "rss", "ar", "es", "rank", "kept", "points", "corners"
    }
    assert set(doc["timings_ms"]) >= {"denoise", "canny", "contours", "corners", "linking", "scoring"}


def test_stage_errors_are_labelled(monkeypatch, scene):
    def boom(*a, **k):
        raise ValueError("broken")

    monkeypatch.setattr(pl, "link_edges", boom)
    with pytest.raises(PipelineError) as info:
        run_pipeline(scene[0])
    assert info.value.stage == "linking"
    with pytest.raises(PipelineError) as info:
        run_pipeline(GrayFrame(np.zeros((2, 2), np.uint8)))
    assert info.value.stage == "scale"


def _graph(lengths):
    cs = [Contour(np.c_[np.arange(n), np.full(n, 2 * i)]) for i, n in enumerate(lengths)]
    return EdgeGraph(ContourSet(cs, 30, 20), [], [set() for _ in cs])


def test_render_edges():
    g = _graph([10, 7, 12])
    assert not render_edges(g, [], (30, 20)).any()
    assert render_edges(g, [0], (30, 20)).sum() == 10
    assert render_edges(g, [0, 2], (30, 20)).sum() == 22
    with pytest.raises(IndexError):
        render_edges(g, [3], (30, 20))
    with pytest.raises(IndexError):
        render_edges(g, [-1], (30, 20))


def test_render_round_trip(scene_result):
    g = scene_result.graph
    idx = list(range(len(g.edges)))
    again = extract_contours(render_edges(g, idx, (200, 150)))
    ours = sorted(sorted(map(tuple, c.points.tolist())) for c in g.edges)
    theirs = sorted(sorted(map(tuple, c.points.tolist())) for c in again)
    assert ours == theirs


def test_compare_all_detectors(scene):
    frame, truth = scene
    res = compare_detectors(frame, pl.DETECTOR_KINDS, KEEP_ONE)
    assert list(res) == list(pl.DETECTOR_KINDS)
    for emap, count in res.values():
        assert emap.shape == truth.shape and count == emap.sum()
    near = ndimage.binary_dilation(truth, EIGHT)
    retaining = {k: v for k, v in res.items() if (v[0] & near).sum() >= 0.8 * truth.sum()}
    assert "proposed" in retaining
    comps = {k: count_components(v[0]) for k, v in retaining.items()}
    assert comps["proposed"] == min(comps.values())


def test_compare_canny_dispatch(scene):
    frame, _ = scene
    cfg = PipelineConfig(denoiser=DenoiserSpec.gaussian())
    got = compare_detectors(frame, ["canny"], cfg)["canny"][0]
    work = scale_dpg(frame).data.astype(float)
    assert np.array_equal(got, canny(work, CannyConfig()))


def test_compare_constant_and_unknown():
    flat = RawFrame(np.full((20, 20), 3000))
    for emap, count in compare_detectors(flat, pl.DETECTOR_KINDS, KEEP_ONE).values():
        assert count == 0
    with pytest.raises(ValueError):
        compare_detectors(flat, ["canny", "sharpen"])


def test_noise_rejection_beats_raw_canny(scene, scene_result):
    frame, truth = scene
    raw = canny(scale_dpg(frame).data.astype(float), CannyConfig())
    assert iou(scene_result.edge_map, truth) >= 0.8 > iou(raw, truth)


def test_overrides_and_config_text():
    text = "# tuning\nscore.et = 4\ndenoiser.kind = gaussian\ncontour.loop_T = 2.5\nworkers=2\n"
    cfg = with_overrides(PipelineConfig(), parse_config_text(text))
    assert cfg.score.et == 4 and cfg.denoiser.kind == "gaussian"
    assert cfg.contour == ContourConfig(loop_T=2.5) and cfg.workers == 2
    cfg = with_overrides(cfg, {"score.et": 9, "denoiser.sigma": "1.2", "denoiser.size": "7"})
    assert cfg.score.et == 9 and cfg.denoiser.sigma == 1.2
    for bad in ({"nope": 1}, {"score.nope": 1}, {"score": 1}, {"score.et": "x"}, {"canny.low": "0.9"}):
        with pytest.raises(ConfigError):
            with_overrides(PipelineConfig(), bad)
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")
