"""Noise reduction: Gaussian blur and non-local means behind one dispatcher."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

# classic 5x5 integer approximation of a sigma~1.4 Gaussian, normalised by 159
GAUSS5_PRESET = np.array(
    [
        [2, 4, 5, 4, 2],
        [4, 9, 12, 9, 4],
        [5, 12, 15, 12, 5],
        [4, 9, 12, 9, 4],
        [2, 4, 5, 4, 2],
    ],
    dtype=np.float64,
) / 159.0

DENOISER_KINDS = ("none", "gaussian", "nlmeans")


def gaussian_kernel(size: int | str = 5, sigma: float | None = None) -> np.ndarray:
    """Normalised ``size x size`` Gaussian.

    ``size="paper5"`` (or ``size=5`` with ``sigma=None``) returns the fixed
    integer 5x5 kernel divided by 159.
    """
    if size == "paper5" or (size == 5 and sigma is None):
        return GAUSS5_PRESET.copy()
    if isinstance(size, str):
        raise ValueError(f"unknown kernel preset {size!r}")
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    if sigma is None or sigma <= 0:
        raise ValueError("sigma must be positive")
    r = size // 2
    i = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(i[:, None] ** 2 + i[None, :] ** 2) / (2.0 * sigma**2))
    return k / k.sum()


def convolve(frame: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Correlate ``frame`` with ``kernel`` using replicate borders.

    Correlation, not flipped convolution: the signed gradient kernels are
    applied exactly as written.
    """
    frame = np.asarray(frame, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if frame.size == 0:
        raise ValueError("empty frame")
    limit = 2 * min(frame.shape) + 1
    if max(kernel.shape) > limit:
        raise ValueError(
            f"kernel {kernel.shape} too large for frame {frame.shape} (limit {limit})"
        )
    # origin shifts even-sized kernels so the anchor is the top-left tap
    origin = [-(s // 2) if s % 2 == 0 else 0 for s in kernel.shape]
    return ndimage.correlate(frame, kernel, mode="nearest", origin=origin)


def _box_sum(a: np.ndarray, k: int) -> np.ndarray:
    # plain shifted-slice sums: each output depends only on its own window,
    # so any row partition of the image reproduces the same bits
    rows, cols = a.shape[0] - k + 1, a.shape[1] - k + 1
    acc = a[:rows].copy()
    for d in range(1, k):
        acc += a[d : d + rows]
    out = acc[:, :cols].copy()
    for d in range(1, k):
        out += acc[:, d : d + cols]
    return out


def _nl_means_rows(
    padded: np.ndarray,
    pad: int,
    y0: int,
    y1: int,
    width: int,
    patch: int,
    search: int,
    h2: float,
    noise2: float,
) -> np.ndarray:
    pr, sr = patch // 2, search // 2
    rows = y1 - y0
    npix = float(patch * patch)
    # self weight is exp(0) = 1
    weight_sum = np.ones((rows, width))
    value_sum = padded[y0 + pad : y1 + pad, pad : pad + width].copy()
    for dy in range(0, sr + 1):
        for dx in range(-sr, sr + 1):
            if dy == 0 and dx <= 0:
                continue
            # weights w(q) between q and q + d are computed once over the
            # union of the block and the block shifted by -d, then used for
            # both offsets +d (at p) and -d (at p, via q = p - d)
            qy0, qx0 = y0 - dy, min(0, -dx)
            qh, qw = rows + dy, width + abs(dx)
            ry, rx = qy0 + pad - pr, qx0 + pad - pr
            ref = padded[ry : ry + qh + 2 * pr, rx : rx + qw + 2 * pr]
            moved = padded[ry + dy : ry + dy + qh + 2 * pr, rx + dx : rx + dx + qw + 2 * pr]
            diff = ref - moved
            d2 = _box_sum(diff * diff, patch) / npix
            if noise2:
                d2 = np.maximum(d2 - 2.0 * noise2, 0.0)
            w = np.exp(-d2 / h2)
            # p indexed inside w: forward uses q = p, backward uses q = p - d
            fy, fx = dy, -qx0
            by, bx = 0, -qx0 - dx
            w_fwd = w[fy : fy + rows, fx : fx + width]
            w_bwd = w[by : by + rows, bx : bx + width]
            py, px = y0 + pad, pad
            weight_sum += w_fwd
            value_sum += w_fwd * padded[py + dy : py + dy + rows, px + dx : px + dx + width]
            weight_sum += w_bwd
            value_sum += w_bwd * padded[py - dy : py - dy + rows, px - dx : px - dx + width]
    return value_sum / weight_sum


def nl_means(
    frame: np.ndarray,
    patch: int = 7,
    search: int = 21,
    h: float = 10.0,
    noise_sigma: float = 0.0,
    workers: int = 1,
) -> np.ndarray:
    """Non-local means with square patches and a square search window.

    Weights are ``exp(-max(d2 - 2*noise_sigma**2, 0) / h**2)`` where ``d2`` is
    the mean squared difference between patches. The self weight comes first,
    then each offset pair ``+d, -d`` in row-major order of ``d`` over the
    upper half of the window. ``workers`` splits the image into row blocks
    and does not change a single bit of the result.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if patch < 1 or patch % 2 == 0 or search < 1 or search % 2 == 0:
        raise ValueError("patch and search sizes must be odd and positive")
    if patch > search:
        raise ValueError("patch must not exceed the search window")
    if not h > 0:
        raise ValueError("h must be positive")
    height, width = frame.shape
    pad = patch // 2 + search // 2
    padded = np.pad(frame, pad, mode="edge")
    h2, noise2 = float(h) ** 2, float(noise_sigma) ** 2

    workers = max(1, int(workers))
    if workers == 1:
        return _nl_means_rows(padded, pad, 0, height, width, patch, search, h2, noise2)
    bounds = np.linspace(0, height, workers + 1).astype(int)
    spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    out = np.empty_like(frame)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_nl_means_rows, padded, pad, a, b, width, patch, search, h2, noise2): (a, b)
            for a, b in spans
        }
        for fut, (a, b) in futures.items():
            out[a:b] = fut.result()
    return out


@dataclass(frozen=True)
class DenoiserSpec:
    """Which denoiser to run and with what parameters.

    ``kind="gaussian"`` with ``sigma=None`` selects the fixed 5x5 preset.
    """

    kind: str = "none"
    size: int = 5
    sigma: float | None = None
    patch: int = 7
    search: int = 21
    h: float = 10.0

    def __post_init__(self):
        if self.kind not in DENOISER_KINDS:
            raise ValueError(f"unknown denoiser {self.kind!r}; choose from {DENOISER_KINDS}")
        if self.kind == "gaussian":
            if self.size < 1 or self.size % 2 == 0:
                raise ValueError("gaussian size must be odd")
            if self.sigma is None and self.size != 5:
                raise ValueError("the preset kernel is 5x5; give sigma for other sizes")
            if self.sigma is not None and self.sigma <= 0:
                raise ValueError("sigma must be positive")
        if self.kind == "nlmeans":
            if self.patch % 2 == 0 or self.search % 2 == 0:
                raise ValueError("nlmeans patch and search must be odd")
            if self.patch > self.search:
                raise ValueError("nlmeans patch must not exceed search")
            if self.h <= 0:
                raise ValueError("nlmeans h must be positive")

    @classmethod
    def gaussian(cls, size: int = 5, sigma: float | None = None) -> "DenoiserSpec":
        return cls("gaussian", size=size, sigma=sigma)

    @classmethod
    def nlmeans(cls, patch: int = 7, search: int = 21, h: float = 10.0) -> "DenoiserSpec":
        return cls("nlmeans", patch=patch, search=search, h=h)


def denoise(frame: np.ndarray, spec: DenoiserSpec, workers: int = 1) -> np.ndarray:
    if spec.kind == "none":
        return np.asarray(frame, dtype=np.float64)
    if spec.kind == "gaussian":
        return convolve(frame, gaussian_kernel(spec.size, spec.sigma))
    return nl_means(frame, spec.patch, spec.search, spec.h, workers=workers)
