"""Smoothness-based edge scoring.

Each edge is cut at its corners, every piece is fitted with a cubic, and the
summed squared residuals feed a score in which long, smooth, corner-poor,
well-connected and closed edges come out lowest (strongest).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .contours import LOOP
from .linking import EdgeGraph

X_MAJOR, Y_MAJOR = "x-major", "y-major"


@dataclass(frozen=True)
class CubicFit:
    """``f(t) = a t^3 + b t^2 + c t + d`` with ``t`` the independent axis."""

    a: float
    b: float
    c: float
    d: float
    axis: str = X_MAJOR

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def __call__(self, t):
        return np.polyval(self.coefficients, t)


@dataclass(frozen=True)
class ScoreConfig:
    phi_line: float = 1.0
    phi_loop: float = 2.0
    et: int = 30

    def __post_init__(self):
        if self.phi_line <= 0 or self.phi_loop <= 0:
            raise ValueError("loop/line ratios must be positive")
        if self.et < 1:
            raise ValueError("et must be >= 1")


@dataclass(frozen=True)
class ScoredEdge:
    edge_index: int
    n: int
    m: int
    rss: float
    ar: float
    nprime: int
    phi: float
    es: float
    mode: str = "line"


def _shift_poly(c_centered: np.ndarray, mu: float) -> np.ndarray:
    """Coefficients (highest first) of ``p(t - mu)`` given those of ``p``."""
    out = np.zeros(4)
    # p(s) = sum_k c_k s^k with s = t - mu; expand binomially
    low = c_centered[::-1]  # c0, c1, c2, c3
    for k, ck in enumerate(low):
        for i in range(k + 1):
            out[3 - i] += ck * comb(k, i) * (-mu) ** (k - i)
    return out


def fit_cubic(points, axis: str | None = None) -> tuple[CubicFit, float]:
    """Least-squares cubic through ``points`` (``(x, y)`` rows).

    Unless ``axis`` forces it, the independent variable is the coordinate
    with the larger span (x on ties). The normal equations are solved on mean-centred abscissae; with
    fewer than four distinct abscissae the degree drops so the system stays
    regular (and the fit interpolates).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        raise ValueError("need at least two points to fit")
    if np.all(pts == pts[0]):
        raise ValueError("all points coincide")
    if axis is None:
        axis = X_MAJOR if np.ptp(pts[:, 0]) >= np.ptp(pts[:, 1]) else Y_MAJOR
    if axis not in (X_MAJOR, Y_MAJOR):
        raise ValueError(f"unknown axis {axis!r}")
    if axis == X_MAJOR:
        t, v, axis = pts[:, 0], pts[:, 1], X_MAJOR
    else:
        t, v, axis = pts[:, 1], pts[:, 0], Y_MAJOR
    mu = float(t.mean())
    s = t - mu
    degree = min(3, len(np.unique(t)) - 1)
    vander = np.vander(s, degree + 1, increasing=True)
    normal = vander.T @ vander
    rhs = vander.T @ v
    coef = np.linalg.solve(normal, rhs)
    resid = v - vander @ coef
    rss = float(resid @ resid)
    full = np.zeros(4)
    full[: degree + 1] = coef
    a, b, c, d = _shift_poly(full[::-1], mu)
    return CubicFit(float(a), float(b), float(c), float(d), axis), rss


def assign_corners(graph: EdgeGraph) -> list[list[int]]:
    """Sorted corner point indices per edge, extremities included.

    Open edges must already carry their two endpoint corners. A loop has no
    ends, so its seam (first and last traced point) is added as the pair of
    extremities that bound the fitted pieces.
    """
    per_edge: list[set[int]] = [set() for _ in graph.edges.contours]
    for c in graph.corners:
        if not 0 <= c.contour_index < len(per_edge):
            raise ValueError(f"corner references missing edge {c.contour_index}")
        per_edge[c.contour_index].add(c.point_index)
    out = []
    for i, (idx, edge) in enumerate(zip(per_edge, graph.edges.contours)):
        n = len(edge)
        if edge.mode == LOOP:
            idx = idx | {0, n - 1}
        elif not {0, n - 1} <= idx:
            raise ValueError(f"edge {i} is missing an endpoint corner")
        if len(idx) < 2:
            raise ValueError(f"edge {i} has fewer than two corners")
        out.append(sorted(idx))
    return out


def _piece_rss(pieces: list[np.ndarray]) -> np.ndarray:
    """Residual sum of squares of the cubic fit of every piece, batched.

    Same model as :func:`fit_cubic` (larger-span axis, centred abscissae,
    degree capped by the number of distinct abscissae) but the normal
    equations of all pieces are assembled with one pass of segment sums.
    """
    if not pieces:
        return np.zeros(0)
    sizes = np.array([len(p) for p in pieces])
    if sizes.min() < 2:
        raise ValueError("need at least two points to fit")
    pts = np.concatenate(pieces).astype(np.float64)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    owner = np.repeat(np.arange(len(pieces)), sizes)
    xmax, xmin = np.maximum.reduceat(pts[:, 0], starts), np.minimum.reduceat(pts[:, 0], starts)
    ymax, ymin = np.maximum.reduceat(pts[:, 1], starts), np.minimum.reduceat(pts[:, 1], starts)
    xspan, yspan = xmax - xmin, ymax - ymin
    if np.any((xspan == 0) & (yspan == 0)):
        raise ValueError("all points coincide")
    x_major = (xspan >= yspan)[owner]
    t = np.where(x_major, pts[:, 0], pts[:, 1])
    v = np.where(x_major, pts[:, 1], pts[:, 0])
    mu = np.add.reduceat(t, starts) / sizes
    s = t - mu[owner]
    # distinct abscissae per piece (integer pixel coordinates)
    order = np.lexsort((t, owner))
    ts, os_ = t[order], owner[order]
    new_val = np.ones(len(ts), dtype=bool)
    new_val[1:] = (ts[1:] != ts[:-1]) | (os_[1:] != os_[:-1])
    distinct = np.bincount(os_[new_val], minlength=len(pieces))
    degree = np.minimum(3, distinct - 1)
    powers = s[:, None] ** np.arange(7)
    moments = np.add.reduceat(powers, starts, axis=0)
    rhs_all = np.add.reduceat(powers[:, :4] * v[:, None], starts, axis=0)
    coef = np.zeros((len(pieces), 4))
    for d in np.unique(degree):
        sel = np.flatnonzero(degree == d)
        k = d + 1
        idx = np.arange(k)
        normal = moments[sel][:, idx[:, None] + idx[None, :]]
        coef[sel, :k] = np.linalg.solve(normal, rhs_all[sel, :k, None])[..., 0]
    resid = v - np.einsum("ij,ij->i", powers[:, :4], coef[owner])
    return np.bincount(owner, weights=resid * resid, minlength=len(pieces))


def _pieces(points: np.ndarray, corner_indices) -> list[np.ndarray]:
    cidx = sorted(corner_indices)
    if len(cidx) < 2:
        raise ValueError("need at least two corners")
    return [points[lo : hi + 1] for lo, hi in zip(cidx[:-1], cidx[1:])]


def edge_rss(points, corner_indices) -> tuple[float, float]:
    """Total squared residual of the per-piece cubic fits and its mean per pixel."""
    pts = np.asarray(points)
    total = float(_piece_rss(_pieces(pts, corner_indices)).sum())
    return total, total / len(pts)


def edge_score(
    ar: float, n: int, m: int, nprime: int, phi: float, width: int, height: int
) -> float:
    """``AR * W * L * M^2 / (N^2 * N' * phi)``; smaller is better."""
    if n <= 0 or nprime <= 0:
        raise ValueError("pixel counts must be positive")
    return (ar * width * height * m * m) / (n * n * nprime * phi)


def score_edges(graph: EdgeGraph, cfg: ScoreConfig = ScoreConfig()) -> list[ScoredEdge]:
    corners = assign_corners(graph)
    sizes = [len(e) for e in graph.edges.contours]
    pieces, piece_edge = [], []
    for i, edge in enumerate(graph.edges.contours):
        cut = _pieces(edge.points, corners[i])
        pieces.extend(cut)
        piece_edge.extend([i] * len(cut))
    rss_all = np.bincount(
        np.asarray(piece_edge, dtype=np.int64), weights=_piece_rss(pieces), minlength=len(sizes)
    )
    out = []
    for i, edge in enumerate(graph.edges.contours):
        n = sizes[i]
        rss = float(rss_all[i])
        ar = rss / n
        adj = graph.adjacency[i] if i < len(graph.adjacency) else set()
        nprime = n + sum(sizes[j] for j in adj)
        phi = cfg.phi_loop if edge.mode == LOOP else cfg.phi_line
        m = len(corners[i])
        es = edge_score(ar, n, m, nprime, phi, graph.edges.width, graph.edges.height)
        out.append(ScoredEdge(i, n, m, rss, ar, nprime, phi, es, edge.mode))
    return out


def rank_and_filter(scored: list[ScoredEdge], et: int) -> list[ScoredEdge]:
    """Strongest first (ascending score, then edge index); at most ``et`` kept."""
    ranked = sorted(scored, key=lambda s: (s.es, s.edge_index))
    return ranked if et >= len(ranked) else ranked[:et]
