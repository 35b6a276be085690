"""Canny edge detection and the classical baseline detectors.

Orientation conventions: ``x`` grows to the right and ``y`` grows downward.
The vertical kernel has its positive row on top, so ``gy`` is positive when
intensity increases *upward* and gradient directions are ordinary
counter-clockwise angles with the y axis pointing up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .denoise import DenoiserSpec, convolve, denoise

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = np.array([[1, 2, 1], [0, 0, 0], [-1, -2, -1]], dtype=np.float64)
PREWITT_X = np.array([[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]], dtype=np.float64)
PREWITT_Y = np.array([[1, 1, 1], [0, 0, 0], [-1, -1, -1]], dtype=np.float64)
ROBERTS_A = np.array([[1, 0], [0, -1]], dtype=np.float64)
ROBERTS_B = np.array([[0, 1], [-1, 0]], dtype=np.float64)

BASELINE_KINDS = ("prewitt", "roberts", "sobel", "log")

# (dx, dy) of the neighbour lying along +direction for each quantised angle;
# the opposite neighbour is the negation
_FORWARD = {0: (1, 0), 45: (1, -1), 90: (0, -1), 135: (-1, -1)}

EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray  # degrees in [0, 180)
    qdirection: np.ndarray  # one of 0, 45, 90, 135


@dataclass(frozen=True)
class CannyConfig:
    """Hysteresis thresholds as fractions of the frame's maximum gradient."""

    low: float = 0.05
    high: float = 0.15
    denoiser: DenoiserSpec = field(default_factory=lambda: DenoiserSpec.gaussian())

    def __post_init__(self):
        if not 0 <= self.low < self.high <= 1:
            raise ValueError(f"need 0 <= low < high <= 1, got {self.low}, {self.high}")


def quantize_direction(angle):
    """Snap angles (degrees) to 0, 45, 90 or 135.

    Angles are reduced mod 180; exact midpoints go to the larger label and
    [157.5, 180) wraps to 0. Works on scalars and arrays.
    """
    a = np.mod(np.asarray(angle, dtype=np.float64), 180.0)
    q = (np.floor((a + 22.5) / 45.0).astype(np.int64) % 4) * 45
    if q.ndim == 0:
        return int(q)
    return q


def gradient_field(gx: np.ndarray, gy: np.ndarray) -> GradientField:
    mag = np.sqrt(gx * gx + gy * gy)
    direction = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    direction[direction >= 180.0] = 0.0
    return GradientField(gx, gy, mag, direction, quantize_direction(direction))


def sobel_gradients(frame: np.ndarray) -> GradientField:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2 or min(frame.shape) < 3:
        raise ValueError(f"frame must be at least 3x3, got {frame.shape}")
    return gradient_field(convolve(frame, SOBEL_X), convolve(frame, SOBEL_Y))


def _shifted(a: np.ndarray, dx: int, dy: int, fill: float) -> np.ndarray:
    """``out[y, x] = a[y + dy, x + dx]``, ``fill`` where that is out of bounds."""
    h, w = a.shape
    out = np.full_like(a, fill)
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    ys_src = slice(max(0, dy), min(h, h + dy))
    xs_src = slice(max(0, dx), min(w, w + dx))
    out[ys, xs] = a[ys_src, xs_src]
    return out


def non_max_suppression(g: GradientField) -> np.ndarray:
    """Thin the magnitude map along the quantised gradient direction.

    A pixel survives when it is strictly greater than its neighbour along
    +direction and at least equal to the one along -direction, so a two-pixel
    plateau keeps exactly one pixel. Missing (out-of-bounds) neighbours never
    suppress.
    """
    mag = g.magnitude
    keep = np.zeros(mag.shape, dtype=bool)
    for q, (dx, dy) in _FORWARD.items():
        sel = g.qdirection == q
        if not sel.any():
            continue
        fwd = _shifted(mag, dx, dy, -np.inf)
        bwd = _shifted(mag, -dx, -dy, -np.inf)
        keep |= sel & (mag > fwd) & (mag >= bwd)
    return np.where(keep, mag, 0.0)


def hysteresis(thinned: np.ndarray, low: float, high: float) -> np.ndarray:
    """Double-threshold edge selection with 8-connected promotion.

    Zero-valued (suppressed) pixels are never edges, so a zero ``low`` does
    not flood the background.
    """
    if low > high:
        raise ValueError("low threshold exceeds high threshold")
    thinned = np.asarray(thinned)
    candidate = (thinned > 0) & (thinned >= low)
    strong = candidate & (thinned >= high)
    if not strong.any():
        return np.zeros(thinned.shape, dtype=bool)
    labels, n = ndimage.label(candidate, structure=EIGHT)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels]


def canny(frame: np.ndarray, cfg: CannyConfig = CannyConfig(), workers: int = 1) -> np.ndarray:
    smooth = denoise(frame, cfg.denoiser, workers=workers)
    g = sobel_gradients(smooth)
    peak = float(g.magnitude.max())
    if peak == 0.0:
        return np.zeros(g.magnitude.shape, dtype=bool)
    thinned = non_max_suppression(g)
    return hysteresis(thinned, cfg.low * peak, cfg.high * peak)


def log_kernel(size: int = 9, sigma: float = 1.4) -> np.ndarray:
    """Zero-sum Laplacian-of-Gaussian kernel."""
    r = size // 2
    i = np.arange(-r, r + 1, dtype=np.float64)
    r2 = i[:, None] ** 2 + i[None, :] ** 2
    k = -(1.0 - r2 / (2 * sigma**2)) * np.exp(-r2 / (2 * sigma**2)) / (np.pi * sigma**4)
    return k - k.mean()


def zero_crossings(response: np.ndarray, threshold: float) -> np.ndarray:
    """Mark sign changes between 4-neighbours whose contrast clears the threshold.

    Of the two pixels straddling a crossing, the one closer to zero is marked.
    ``threshold`` is a fraction of the largest crossing contrast.
    """
    r = response
    out = np.zeros(r.shape, dtype=bool)
    pairs = []
    for a, b in ((r[:, :-1], r[:, 1:]), (r[:-1, :], r[1:, :])):
        cross = ((a < 0) & (b > 0)) | ((a > 0) & (b < 0))
        pairs.append((cross, np.abs(a - b)))
    peak = max((float(c[x].max()) if x.any() else 0.0) for x, c in pairs)
    if peak == 0.0:
        return out
    for axis, (cross, contrast) in enumerate(pairs):
        hit = cross & (contrast >= threshold * peak)
        if axis == 0:
            a, b = np.abs(r[:, :-1]), np.abs(r[:, 1:])
            out[:, :-1] |= hit & (a <= b)
            out[:, 1:] |= hit & (b < a)
        else:
            a, b = np.abs(r[:-1, :]), np.abs(r[1:, :])
            out[:-1, :] |= hit & (a <= b)
            out[1:, :] |= hit & (b < a)
    return out


def baseline_detect(frame: np.ndarray, kind: str, threshold: float = 0.2) -> np.ndarray:
    """Classical detectors: gradient magnitude (or LoG zero crossings) vs a
    fraction of the frame maximum. No smoothing is applied here."""
    frame = np.asarray(frame, dtype=np.float64)
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown detector {kind!r}; choose from {BASELINE_KINDS}")
    if kind == "log":
        if min(frame.shape) < 5:
            raise ValueError("frame too small for the 9x9 LoG kernel")
        return zero_crossings(convolve(frame, log_kernel()), threshold)
    if kind == "roberts":
        if min(frame.shape) < 2:
            raise ValueError("frame too small for the Roberts kernels")
        ga, gb = convolve(frame, ROBERTS_A), convolve(frame, ROBERTS_B)
    else:
        if min(frame.shape) < 3:
            raise ValueError("frame too small for 3x3 kernels")
        kx, ky = (SOBEL_X, SOBEL_Y) if kind == "sobel" else (PREWITT_X, PREWITT_Y)
        ga, gb = convolve(frame, kx), convolve(frame, ky)
    mag = np.sqrt(ga * ga + gb * gb)
    peak = float(mag.max())
    if peak == 0.0:
        return np.zeros(mag.shape, dtype=bool)
    return mag >= threshold * peak
