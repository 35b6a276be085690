"""Synthetic shapes and scenes with known ground truth, for tests and scripts."""

from __future__ import annotations

import numpy as np

from .contours import line_pixels
from .imageio import RawFrame


def bresenham_circle(cx: int, cy: int, r: int) -> np.ndarray:
    """Midpoint-circle pixels ``(x, y)`` in traversal order around the ring."""
    octant = []
    x, y, err = r, 0, 1 - r
    while x >= y:
        octant.append((x, y))
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1
    # unfold the first octant into the full ring, counter-clockwise in (x, y-up)
    ring = []
    for sx, sy, swap in (
        (1, 1, False), (1, 1, True), (-1, 1, True), (-1, 1, False),
        (-1, -1, False), (-1, -1, True), (1, -1, True), (1, -1, False),
    ):
        seg = [(sx * (b if swap else a), sy * (a if swap else b)) for a, b in octant]
        if swap != (sx * sy < 0):
            seg = seg[::-1]
        ring.extend(seg)
    out = []
    seen = set()
    for px, py in ring:
        p = (cx + px, cy + py)
        if p not in seen:
            seen.add(p)
            out.append(p)
    return np.array(out, dtype=np.int64)


def polyline(vertices, closed: bool = False) -> np.ndarray:
    """Rasterise a polyline into an ordered pixel path without duplicates."""
    verts = [tuple(int(v) for v in p) for p in vertices]
    if closed:
        verts = verts + [verts[0]]
    out = []
    for (x0, y0), (x1, y1) in zip(verts[:-1], verts[1:]):
        seg = line_pixels(x0, y0, x1, y1)
        out.extend(seg if not out else seg[1:])
    if closed and len(out) > 1 and out[-1] == out[0]:
        out.pop()
    return np.array(out, dtype=np.int64)


def rasterize(points: np.ndarray, width: int, height: int) -> np.ndarray:
    out = np.zeros((height, width), dtype=bool)
    pts = np.asarray(points)
    out[pts[:, 1], pts[:, 0]] = True
    return out


def rectangle_boundary(rect: tuple[int, int, int, int]) -> np.ndarray:
    """Closed pixel ring of the axis-aligned rectangle ``(x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = rect
    return polyline([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], closed=True)


def rectangle_scene(
    width: int = 200,
    height: int = 150,
    rect: tuple[int, int, int, int] = (50, 40, 149, 109),
    base: int = 8000,
    contrast: int = 120,
    noise_sigma: float = 10.0,
    seed: int = 0,
):
    """Raw frame holding one warm rectangle in Gaussian sensor noise.

    Boundary pixels carry half the contrast, so the true edge runs through
    their centres rather than between two pixel columns. Returns the frame
    and the boolean ground-truth boundary map.
    """
    x0, y0, x1, y1 = rect
    if not (0 < x0 < x1 < width - 1 and 0 < y0 < y1 < height - 1):
        raise ValueError("rectangle must lie strictly inside the frame")
    img = np.full((height, width), float(base))
    img[y0 : y1 + 1, x0 : x1 + 1] += contrast
    ring = rectangle_boundary(rect)
    img[ring[:, 1], ring[:, 0]] = base + contrast / 2.0
    rng = np.random.default_rng(seed)
    img += rng.normal(0.0, noise_sigma, img.shape)
    raw = np.clip(np.rint(img), 0, 65535).astype(np.uint16)
    return RawFrame(raw), rasterize(ring, width, height)
