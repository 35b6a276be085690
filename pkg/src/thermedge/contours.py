"""Contour extraction from binary edge maps.

Curves are traced along 8-connected neighbours, short gaps are bridged with
rasterised line pixels, and each end is tagged either as a free endpoint or
as a T-junction touching a previously extracted contour's interior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

LINE, LOOP = "line", "loop"
ENDPOINT, T_JUNCTION = "endpoint", "t_junction"

# 4-neighbours first so staircases are followed pixel by pixel
_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1))
EIGHT_RING = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=np.int64)


@dataclass(eq=False)
class Contour:
    """Ordered pixel path; ``points`` is an ``(n, 2)`` int array of ``(x, y)``."""

    points: np.ndarray
    mode: str = LINE
    start_tag: str = ENDPOINT
    end_tag: str = ENDPOINT

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    @property
    def closed(self) -> bool:
        return self.mode == LOOP

    def same_as(self, other: "Contour") -> bool:
        return (
            self.mode == other.mode
            and self.start_tag == other.start_tag
            and self.end_tag == other.end_tag
            and np.array_equal(self.points, other.points)
        )


@dataclass(eq=False)
class ContourSet:
    contours: list[Contour]
    width: int
    height: int

    def __len__(self):
        return len(self.contours)

    def __iter__(self):
        return iter(self.contours)

    def __getitem__(self, i):
        return self.contours[i]


def line_pixels(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Bresenham rasterisation from ``(x0, y0)`` to ``(x1, y1)``, both ends included."""
    pts = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        pts.append((x, y))
        if x == x1 and y == y1:
            return pts
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def classify_mode(contour: Contour, threshold: float = 3.0) -> str:
    """``loop`` when the two ends are strictly closer than ``threshold``."""
    if len(contour) < 2:
        raise ValueError("need at least two points to classify a contour")
    (x0, y0), (x1, y1) = contour.points[0], contour.points[-1]
    contour.mode = LOOP if math.hypot(x1 - x0, y1 - y0) < threshold else LINE
    return contour.mode


class _Tracer:
    def __init__(self, edge: np.ndarray, gap_fill_radius: int):
        self.edge = edge
        self.h, self.w = edge.shape
        self.visited = np.zeros(edge.shape, dtype=bool)
        self.radius = gap_fill_radius
        # bridge search offsets, nearest first, ties row-major
        r = gap_fill_radius
        offs = [
            (dx, dy)
            for dy in range(-r, r + 1)
            for dx in range(-r, r + 1)
            if max(abs(dx), abs(dy)) > 1
        ]
        self.gap_offsets = sorted(offs, key=lambda o: (o[0] ** 2 + o[1] ** 2, o[1], o[0]))

    def _is_free(self, x, y) -> bool:
        return 0 <= x < self.w and 0 <= y < self.h and self.edge[y, x] and not self.visited[y, x]

    def _step(self, x, y):
        for dx, dy in _STEPS:
            if self._is_free(x + dx, y + dy):
                return [(x + dx, y + dy)]
        for dx, dy in self.gap_offsets:
            tx, ty = x + dx, y + dy
            if not self._is_free(tx, ty):
                continue
            between = line_pixels(x, y, tx, ty)[1:-1]
            # a bridge may not cross any existing edge pixel
            if any(self.edge[by, bx] or self.visited[by, bx] for bx, by in between):
                continue
            return between + [(tx, ty)]
        return []

    def trace(self, x, y) -> list[tuple[int, int]]:
        """Follow from ``(x, y)`` until stuck. Bridge pixels are included."""
        pts = []
        while True:
            nxt = self._step(x, y)
            if not nxt:
                return pts
            for px, py in nxt:
                self.visited[py, px] = True
                pts.append((px, py))
            x, y = nxt[-1]


def extract_contours(
    edge_map: np.ndarray,
    gap_fill_radius: int = 2,
    min_length: int = 5,
    loop_threshold: float = 3.0,
) -> ContourSet:
    """Trace every edge pixel of ``edge_map`` into ordered contours.

    Tracing starts from pixels with at most one edge neighbour (row-major),
    then from the remaining pixels. Each trace runs forward from its seed,
    then backward from the seed, so closed curves come back around to their
    start. Contours with fewer than ``min_length`` points are dropped.
    """
    edge = np.asarray(edge_map, dtype=bool)
    h, w = edge.shape
    tracer = _Tracer(edge, gap_fill_radius)
    counts = ndimage.correlate(edge.astype(np.int64), EIGHT_RING, mode="constant")
    ys, xs = np.nonzero(edge)
    is_end = counts[ys, xs] <= 1
    seeds = [(int(x), int(y)) for x, y in zip(xs[is_end], ys[is_end])]
    seeds += [(int(x), int(y)) for x, y in zip(xs[~is_end], ys[~is_end])]

    owner = np.full((h, w), -1, dtype=np.int64)
    position = np.full((h, w), -1, dtype=np.int64)
    contours: list[Contour] = []
    for sx, sy in seeds:
        if tracer.visited[sy, sx]:
            continue
        tracer.visited[sy, sx] = True
        fwd = tracer.trace(sx, sy)
        back = tracer.trace(sx, sy)
        pts = back[::-1] + [(sx, sy)] + fwd
        if len(pts) < min_length:
            continue
        c = Contour(np.array(pts))
        c.start_tag = _end_tag(pts[0], owner, position, contours)
        c.end_tag = _end_tag(pts[-1], owner, position, contours)
        if len(pts) > 1:
            classify_mode(c, loop_threshold)
        idx = len(contours)
        contours.append(c)
        arr = c.points
        owner[arr[:, 1], arr[:, 0]] = idx
        position[arr[:, 1], arr[:, 0]] = np.arange(len(arr))
    return ContourSet(contours, w, h)


def _end_tag(pt, owner, position, contours) -> str:
    x, y = pt
    h, w = owner.shape
    for dx, dy in _STEPS:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < w and 0 <= ny < h):
            continue
        k = owner[ny, nx]
        if k < 0:
            continue
        i = position[ny, nx]
        host = contours[k]
        if host.mode == LOOP or 0 < i < len(host) - 1:
            return T_JUNCTION
    return ENDPOINT


def render_contours(contours, width: int, height: int) -> np.ndarray:
    out = np.zeros((height, width), dtype=bool)
    for c in contours:
        pts = c.points
        if len(pts):
            out[pts[:, 1], pts[:, 0]] = True
    return out
