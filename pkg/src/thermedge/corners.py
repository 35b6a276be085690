"""Curvature-based corner detection on traced contours.

Candidates are local maxima of absolute curvature of the Gaussian-smoothed
contour. A candidate survives when its curvature clears ``R`` times the mean
curvature of its region of support (the span between the nearest curvature
minima on either side) and when the angle between its two tangents is not
obtuse beyond ``theta_obtuse``. Both ends of every open contour are corners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .contours import LOOP, Contour, ContourSet

CURVATURE = "curvature"
ENDPOINT = "endpoint"

# curvatures below this are float noise on straight runs
_FLAT = 1e-9


@dataclass(frozen=True)
class GlcpParams:
    R: float = 1.5
    theta_obtuse: float = 162.0
    smooth_sigma: float = 3.0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if not 90 < self.theta_obtuse < 180:
            raise ValueError("theta_obtuse must lie in (90, 180)")
        if self.smooth_sigma < 0:
            raise ValueError("smooth_sigma must be non-negative")


@dataclass(frozen=True)
class Corner:
    contour_index: int
    point_index: int
    angle: float | None  # degrees; None for endpoint corners
    kind: str = CURVATURE


def curvature(contour: Contour, smooth_sigma: float = 3.0) -> np.ndarray:
    """Signed curvature at every contour point.

    Coordinates are smoothed with a 1-D Gaussian (wrapping for loops,
    replicating for lines), then ``(x'y'' - x''y') / (x'^2 + y'^2)^1.5`` is
    evaluated with central differences.
    """
    pts = np.asarray(contour.points, dtype=np.float64)
    if len(pts) < 5:
        raise ValueError(f"curvature needs >= 5 points, got {len(pts)}")
    closed = contour.mode == LOOP
    if smooth_sigma > 0:
        pts = gaussian_filter1d(pts, smooth_sigma, axis=0, mode="wrap" if closed else "nearest")
    if closed:
        ext = np.concatenate((pts[-1:], pts, pts[:1]))
    else:
        ext = np.concatenate((pts[:1], pts, pts[-1:]))
    prev, cur, nxt = ext[:-2], ext[1:-1], ext[2:]
    d1 = (nxt - prev) / 2.0
    d2 = nxt - 2.0 * cur + prev
    dx, dy = d1[:, 0], d1[:, 1]
    ddx, ddy = d2[:, 0], d2[:, 1]
    speed = (dx * dx + dy * dy) ** 1.5
    num = dx * ddy - ddx * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(speed > 0, num / speed, 0.0)
    return k


def adaptive_threshold(
    profile: np.ndarray, u: int, ros: tuple[int, int], R: float = 1.5, closed: bool = False
) -> float:
    """``R`` times the mean absolute curvature over ``[u - L2, u + L1]``."""
    l1, l2 = ros
    n = len(profile)
    if l1 < 0 or l2 < 0 or n == 0:
        raise ValueError("empty region of support")
    idx = np.arange(u - l2, u + l1 + 1)
    if closed:
        idx %= n
    elif idx[0] < 0 or idx[-1] >= n:
        raise ValueError("region of support runs past the contour ends")
    return R * float(np.mean(np.abs(np.asarray(profile)[idx])))


def tangent_angle_between(gamma1: float, gamma2: float) -> float:
    """Angle in degrees between two tangent directions given in degrees."""
    d = abs(gamma1 - gamma2) % 360.0
    return d if d < 180.0 else 360.0 - d


def _fit_direction(pts: np.ndarray) -> float:
    """Direction (degrees) of the least-squares line through ``pts``, pointing
    from the first point toward the rest."""
    centred = pts - pts.mean(axis=0)
    sxx, syy = float(centred[:, 0] @ centred[:, 0]), float(centred[:, 1] @ centred[:, 1])
    sxy = float(centred[:, 0] @ centred[:, 1])
    if sxx == 0.0 and syy == 0.0:
        raise ValueError("degenerate tangent fit: all points coincide")
    # principal axis of the 2x2 scatter matrix
    theta = 0.5 * math.atan2(2.0 * sxy, sxx - syy)
    d = (math.cos(theta), math.sin(theta))
    ahead = pts[1:].mean(axis=0) - pts[0]
    if ahead[0] * d[0] + ahead[1] * d[1] < 0:
        theta += math.pi
    return math.degrees(math.atan2(math.sin(theta), math.cos(theta)))


def corner_angle(
    contour: Contour, idx: int, ros: tuple[int, int], min_span: int = 3
) -> float:
    """Angle at ``idx`` between tangents fitted toward the two ROS ends.

    Each side spans at least ``min_span`` points, clamped at the ends of an
    open contour.
    """
    pts = np.asarray(contour.points, dtype=np.float64)
    n = len(pts)
    l1, l2 = max(ros[0], min_span), max(ros[1], min_span)
    if contour.mode == LOOP:
        half = max(1, (n - 1) // 2)
        l1, l2 = min(l1, half), min(l2, half)
        fwd = pts[np.arange(idx, idx + l1 + 1) % n]
        bwd = pts[np.arange(idx, idx - l2 - 1, -1) % n]
    else:
        fwd = pts[idx : min(n, idx + l1 + 1)]
        bwd = pts[max(0, idx - l2) : idx + 1][::-1]
    if len(fwd) < 2 or len(bwd) < 2:
        raise ValueError("corner needs points on both sides")
    return tangent_angle_between(_fit_direction(fwd), _fit_direction(bwd))


def _runs(values: np.ndarray):
    """Run-length encode: (start, end_inclusive, value) for equal stretches."""
    change = np.flatnonzero(np.diff(values) != 0) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change - 1, [len(values) - 1]))
    return starts, ends, values[starts]


def local_maxima(values: np.ndarray, closed: bool) -> list[int]:
    """Indices of strict local maxima; a plateau reports its centre (lower on ties)."""
    values = np.asarray(values)
    n = len(values)
    shift = 0
    if closed:
        # rotate so no run of equal values straddles the seam
        breaks = np.flatnonzero(values != np.roll(values, 1))
        if len(breaks) == 0:
            return []
        shift = int(breaks[0])
        values = np.roll(values, -shift)
    starts, ends, v = _runs(values)
    m = len(v)
    out = []
    for j in range(m):
        if closed:
            left, right = v[j - 1], v[(j + 1) % m]
        elif j == 0 or j == m - 1:
            continue
        else:
            left, right = v[j - 1], v[j + 1]
        if v[j] > left and v[j] > right:
            out.append(int(((starts[j] + ends[j]) // 2 + shift) % n))
    return sorted(out)


def _is_minimum(values: np.ndarray, i: int, closed: bool) -> bool:
    n = len(values)
    if closed:
        return values[i] <= values[(i - 1) % n] and values[i] <= values[(i + 1) % n]
    if i == 0 or i == n - 1:
        return False
    return values[i] <= values[i - 1] and values[i] <= values[i + 1]


def region_of_support(absk: np.ndarray, u: int, closed: bool) -> tuple[int, int]:
    """Distances ``(L1, L2)`` from ``u`` to the nearest curvature minimum
    ahead of and behind it; falls back to the contour end (or one full turn
    for loops)."""
    n = len(absk)
    limit_fwd = n - 1 if closed else n - 1 - u
    limit_bwd = n - 1 if closed else u
    l1 = limit_fwd
    for step in range(1, limit_fwd + 1):
        if _is_minimum(absk, (u + step) % n if closed else u + step, closed):
            l1 = step
            break
    l2 = limit_bwd
    for step in range(1, limit_bwd + 1):
        if _is_minimum(absk, (u - step) % n if closed else u - step, closed):
            l2 = step
            break
    if closed and l1 + l2 >= n:
        # never count a point twice around a loop
        l2 = max(0, n - 1 - l1)
    return l1, l2


def tangent_span(params: GlcpParams) -> int:
    """Fewest points per side for a tangent fit: about the smoothing support,
    so digital staircases are not mistaken for bends."""
    return max(3, int(math.ceil(3.0 * params.smooth_sigma)))


def _refine(absk_fine: np.ndarray, u: int, radius: int, closed: bool) -> int:
    """Move ``u`` to the strongest fine-scale curvature within ``radius``."""
    n = len(absk_fine)
    best, best_val = u, -1.0
    for off in sorted(range(-radius, radius + 1), key=lambda o: (abs(o), o)):
        i = u + off
        if closed:
            i %= n
        elif not 0 <= i < n:
            continue
        if absk_fine[i] > best_val:
            best, best_val = i, absk_fine[i]
    return best


def contour_corners(
    contour: Contour, index: int, params: GlcpParams = GlcpParams()
) -> list[Corner]:
    closed = contour.mode == LOOP
    n = len(contour)
    found: list[Corner] = []
    span = tangent_span(params)
    if n >= 5:
        absk = np.abs(curvature(contour, params.smooth_sigma))
        absk[absk < _FLAT] = 0.0
        fine = None
        seen = set()
        for u in local_maxima(absk, closed):
            ros = region_of_support(absk, u, closed)
            if absk[u] < adaptive_threshold(absk, u, ros, params.R, closed):
                continue
            if params.smooth_sigma > 1.0:
                # smoothing drifts the peak of asymmetric corners; relocate it
                if fine is None:
                    fine = np.abs(curvature(contour, 1.0))
                u = _refine(fine, u, int(math.ceil(params.smooth_sigma)), closed)
            if not closed and (u < 3 or u > n - 4):
                continue
            if u in seen:
                continue
            try:
                angle = corner_angle(contour, u, ros, span)
            except ValueError:
                continue
            if angle > params.theta_obtuse:
                continue
            seen.add(u)
            found.append(Corner(index, u, angle, CURVATURE))
    if not closed and n >= 1:
        found.append(Corner(index, 0, None, ENDPOINT))
        if n > 1:
            found.append(Corner(index, n - 1, None, ENDPOINT))
    found.sort(key=lambda c: c.point_index)
    return found


def detect_corners(cset: ContourSet, params: GlcpParams = GlcpParams()) -> list[Corner]:
    """Corners of every contour, sorted by (contour_index, point_index)."""
    out: list[Corner] = []
    for i, c in enumerate(cset.contours):
        out.extend(contour_corners(c, i, params))
    return out
