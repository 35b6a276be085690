import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from thermedge.contours import (
    ENDPOINT,
    LINE,
    LOOP,
    T_JUNCTION,
    Contour,
    classify_mode,
    extract_contours,
    line_pixels,
    render_contours,
)
from thermedge.synthetic import bresenham_circle, polyline, rasterize


def _as_set(c):
    return {tuple(p) for p in c.points.tolist()}


def test_twelve_pixel_line():
    m = np.zeros((10, 20), bool)
    m[4, 3:15] = True
    cs = extract_contours(m)
    assert len(cs) == 1
    c = cs[0]
    assert len(c) == 12 and c.start_tag == ENDPOINT and c.end_tag == ENDPOINT and c.mode == LINE


def test_diagonal_staircase_is_one_contour():
    pts = polyline([(2, 2), (20, 9)])
    cs = extract_contours(rasterize(pts, 25, 12))
    assert len(cs) == 1 and _as_set(cs[0]) == {tuple(p) for p in pts.tolist()}


def test_one_pixel_hole_is_bridged():
    m = np.zeros((5, 20), bool)
    m[2, 2:9] = True
    m[2, 10:17] = True
    cs = extract_contours(m, gap_fill_radius=2)
    assert len(cs) == 1
    assert len(cs[0]) == 15 and (9, 2) in _as_set(cs[0])


def test_hole_beyond_radius_not_bridged():
    m = np.zeros((5, 25), bool)
    m[2, 2:9] = True
    m[2, 12:19] = True
    assert len(extract_contours(m, gap_fill_radius=2)) == 2


def test_circle_single_closed_contour():
    ring = bresenham_circle(30, 30, 20)
    cs = extract_contours(rasterize(ring, 61, 61))
    assert len(cs) == 1
    c = cs[0]
    (x0, y0), (x1, y1) = c.points[0], c.points[-1]
    assert max(abs(x0 - x1), abs(y0 - y1)) == 1
    assert c.mode == LOOP and len(c) == len(ring)


def test_min_length_discards_short():
    m = np.zeros((5, 20), bool)
    m[1, 2:6] = True
    m[3, 10:18] = True
    cs = extract_contours(m, min_length=5)
    assert [len(c) for c in cs] == [8]


def test_t_junction_tag():
    m = np.zeros((20, 20), bool)
    m[10, 2:18] = True  # host
    m[2:10, 9] = True  # stem touching the host's interior
    cs = extract_contours(m)
    assert len(cs) == 2
    tags = sorted((c.start_tag, c.end_tag) for c in cs)
    assert (ENDPOINT, ENDPOINT) in tags
    assert any(T_JUNCTION in t for t in tags)


@pytest.mark.parametrize("d, mode", [(1, LOOP), (10, LINE), (3, LINE), (2.9, LOOP)])
def test_classify_mode(d, mode):
    if d == 2.9:
        c = Contour(np.array([[0, 0], [5, 5], [2, 2]]))  # |P1 PN| = 2.83
    else:
        c = Contour(np.array([[0, 0], [5, 7], [d, 0]]))
    assert classify_mode(c, 3) == mode and c.mode == mode


def test_classify_needs_two_points():
    with pytest.raises(ValueError):
        classify_mode(Contour(np.array([[1, 1]])))


def test_line_pixels_endpoints_and_connectivity():
    pts = line_pixels(0, 0, 7, -3)
    assert pts[0] == (0, 0) and pts[-1] == (7, -3)
    for (a, b), (c, d) in zip(pts[:-1], pts[1:]):
        assert max(abs(a - c), abs(b - d)) == 1


@given(hnp.arrays(np.bool_, (14, 16), elements=st.booleans()), st.integers(0, 2))
def test_contour_invariants_on_random_maps(m, radius):
    cs = extract_contours(m, gap_fill_radius=radius, min_length=3)
    seen = set()
    for c in cs:
        pts = [tuple(p) for p in c.points.tolist()]
        assert len(set(pts)) == len(pts)
        assert not (seen & set(pts))
        seen |= set(pts)
        for (a, b), (x, y) in zip(pts[:-1], pts[1:]):
            assert max(abs(a - x), abs(b - y)) == 1
        for x, y in pts:
            assert 0 <= x < 16 and 0 <= y < 14
        d = math.dist(pts[0], pts[-1])
        assert (d < 3) == (c.mode == LOOP)
    # every traced original pixel is an edge pixel; everything else is a bridge
    bridged = {p for p in seen if not m[p[1], p[0]]}
    assert radius > 0 or not bridged


@given(hnp.arrays(np.bool_, (12, 12), elements=st.booleans()))
def test_partition_without_gap_fill(m):
    """With no bridging and no length filter every edge pixel lands in exactly one contour."""
    cs = extract_contours(m, gap_fill_radius=0, min_length=1)
    covered = np.zeros_like(m)
    for c in cs:
        assert not covered[c.points[:, 1], c.points[:, 0]].any()
        covered[c.points[:, 1], c.points[:, 0]] = True
    assert np.array_equal(covered, m)


@given(
    st.lists(
        st.tuples(st.integers(2, 30), st.integers(2, 30), st.integers(4, 12), st.integers(4, 12)),
        min_size=1,
        max_size=3,
    )
)
def test_render_extract_round_trip(rects):
    m = np.zeros((50, 50), bool)
    for i, (x, y, w, h) in enumerate(rects):
        # place each rectangle in its own band so they never touch
        y = 2 + 16 * i
        ring = polyline([(x, y), (x + w, y), (x + w, y + h - 2), (x, y + h - 2)], closed=True)
        m |= rasterize(ring, 50, 50)
    cs = extract_contours(m)
    again = extract_contours(render_contours(cs.contours, 50, 50))
    assert sorted(map(sorted, map(_as_set, cs))) == sorted(map(sorted, map(_as_set, again)))


def test_render_counts_pixels():
    c = Contour(np.c_[np.arange(10), np.full(10, 3)])
    assert render_contours([c], 12, 6).sum() == 10
    assert not render_contours([], 12, 6).any()
