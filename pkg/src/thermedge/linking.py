"""Edge linking: join endings (type 1), attach endings to other edges as
T-junctions (type 2) and close nearly-closed edges into loops (type 3).

Rules are applied in passes until none fires. Within a pass candidate events
are ordered by (type, distance, edge index, point index); type 1 is preferred
over type 3 over type 2 so that endings meet endings whenever they can.
An event whose edges were already rewritten in the same pass waits for the
next pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .contours import ENDPOINT, LINE, LOOP, T_JUNCTION, Contour, ContourSet, line_pixels
from .corners import CURVATURE, ENDPOINT as ENDPOINT_CORNER, Corner, corner_angle

TYPE_MERGE, TYPE_CLOSE, TYPE_JUNCTION = 1, 3, 2
_RANK = {TYPE_MERGE: 0, TYPE_CLOSE: 1, TYPE_JUNCTION: 2}

# tangent span used for the angle of corners created by linking
JUNCTION_SPAN = 9


@dataclass(frozen=True)
class LinkConfig:
    gap_link: float = 3.0

    def __post_init__(self):
        if self.gap_link < 0:
            raise ValueError("gap_link must be non-negative")


@dataclass(eq=False)
class EdgeGraph:
    edges: ContourSet
    corners: list[Corner]
    adjacency: list[set[int]] = field(default_factory=list)
    bridge_pixels: int = 0

    def corners_of(self, i: int) -> list[Corner]:
        return [c for c in self.corners if c.contour_index == i]


@dataclass(eq=False)
class _Edge:
    points: list
    mode: str
    tags: list  # [start_tag, end_tag]
    corner_pts: dict  # point index -> (kind, angle)
    alive: bool = True


def _free_ends(e: _Edge):
    """Extremities still eligible for merging/closing: (side, point index)."""
    if e.mode == LOOP or not e.alive:
        return []
    n = len(e.points)
    out = []
    if e.tags[0] == ENDPOINT:
        out.append((0, 0))
    if e.tags[1] == ENDPOINT and n > 1:
        out.append((1, n - 1))
    return out


def _collect_events(edges: list[_Edge], gap: float):
    alive = [i for i, e in enumerate(edges) if e.alive]
    if not alive or gap <= 0:
        return []
    owners, positions, coords = [], [], []
    for i in alive:
        pts = edges[i].points
        owners.extend([i] * len(pts))
        positions.extend(range(len(pts)))
        coords.extend(pts)
    owners = np.asarray(owners)
    positions = np.asarray(positions)
    tree = cKDTree(np.asarray(coords, dtype=np.float64))
    events = []
    for i in alive:
        e = edges[i]
        n = len(e.points)
        for side, pi in _free_ends(e):
            px, py = e.points[pi]
            for k in tree.query_ball_point((px, py), gap - 1e-9):
                j, pj = int(owners[k]), int(positions[k])
                qx, qy = coords[k]
                d = math.hypot(qx - px, qy - py)
                if d >= gap:
                    continue
                if j == i:
                    if side == 0 and pj == n - 1 and (1, n - 1) in _free_ends(e) and n > 2:
                        events.append((TYPE_CLOSE, d, i, 0, i, pj))
                    continue
                other = edges[j]
                m = len(other.points)
                is_end = other.mode == LINE and pj in (0, m - 1)
                if is_end:
                    oside = 0 if pj == 0 else 1
                    if other.tags[oside] == ENDPOINT and i < j:
                        events.append((TYPE_MERGE, d, i, pi, j, pj))
                else:
                    events.append((TYPE_JUNCTION, d, i, pi, j, pj))
    events.sort(key=lambda ev: (_RANK[ev[0]], ev[1], ev[2], ev[3], ev[4], ev[5]))
    return events


def _merge(edges: list[_Edge], i: int, pi: int, j: int, pj: int) -> int:
    a, b = edges[i], edges[j]
    na, nb = len(a.points), len(b.points)
    # orient a so the linked extremity is its tail, b so it is its head
    if pi == 0:
        a_pts = a.points[::-1]
        a_cor = {na - 1 - k: v for k, v in a.corner_pts.items()}
        a_tags = a.tags[::-1]
    else:
        a_pts, a_cor, a_tags = list(a.points), dict(a.corner_pts), list(a.tags)
    if pj == nb - 1:
        b_pts = b.points[::-1]
        b_cor = {nb - 1 - k: v for k, v in b.corner_pts.items()}
        b_tags = b.tags[::-1]
    else:
        b_pts, b_cor, b_tags = list(b.points), dict(b.corner_pts), list(b.tags)
    bridge = line_pixels(*a_pts[-1], *b_pts[0])[1:-1]
    pts = list(a_pts) + bridge + list(b_pts)
    offset = na + len(bridge)
    corners = {}
    for k, v in a_cor.items():
        if k != na - 1:
            corners[k] = v
    for k, v in b_cor.items():
        if k != 0:
            corners[k + offset] = v
    # the old pair of endings becomes one interior corner at the junction
    corners[na - 1] = (CURVATURE, None)
    keep, drop = min(i, j), max(i, j)
    edges[keep] = _Edge(pts, LINE, [a_tags[0], b_tags[1]], corners)
    edges[drop].alive = False
    return len(bridge)


def link_edges(
    cset: ContourSet, corners: list[Corner], cfg: LinkConfig = LinkConfig()
) -> EdgeGraph:
    """Link edges until no rule fires; see the module docstring for ordering."""
    cmaps: list[dict] = [{} for _ in cset.contours]
    for cr in corners:
        cmaps[cr.contour_index][cr.point_index] = (cr.kind, cr.angle)
    edges = [
        _Edge([tuple(p) for p in c.points.tolist()], c.mode, [c.start_tag, c.end_tag], cm)
        for c, cm in zip(cset.contours, cmaps)
    ]
    bridges = 0
    while True:
        events = _collect_events(edges, cfg.gap_link)
        fired = False
        touched: set[int] = set()
        for kind, _d, i, pi, j, pj in events:
            if kind == TYPE_JUNCTION:
                e = edges[i]
                side = 0 if pi == 0 else 1
                if i in touched or e.tags[side] != ENDPOINT:
                    continue
                # the host edge's geometry is unchanged; it may still take part
                e.tags[side] = T_JUNCTION
                touched.add(i)
            elif kind == TYPE_CLOSE:
                if i in touched:
                    continue
                e = edges[i]
                e.mode = LOOP
                n = len(e.points)
                for k in (0, n - 1):
                    if e.corner_pts.get(k, (None,))[0] == ENDPOINT_CORNER:
                        del e.corner_pts[k]
                touched.add(i)
            else:
                if i in touched or j in touched:
                    continue
                bridges += _merge(edges, i, pi, j, pj)
                touched.update((i, j))
            fired = True
        if not fired:
            break
    return _finalise(edges, cset.width, cset.height, cfg.gap_link, bridges)


def _finalise(edges: list[_Edge], width: int, height: int, gap: float, bridges: int) -> EdgeGraph:
    live = [e for e in edges if e.alive]
    contours = [
        Contour(np.array(e.points, dtype=np.int64), e.mode, e.tags[0], e.tags[1]) for e in live
    ]
    adjacency: list[set[int]] = [set() for _ in live]
    if live and gap > 0:
        owners, positions, coords = [], [], []
        for i, e in enumerate(live):
            owners.extend([i] * len(e.points))
            positions.extend(range(len(e.points)))
            coords.extend(e.points)
        tree = cKDTree(np.asarray(coords, dtype=np.float64))
        # every T-junction ending is attached to the nearest interior point of
        # another edge; recomputed from final geometry so that re-linking a
        # linked graph reproduces it
        for i, e in enumerate(live):
            n = len(e.points)
            for side, pi in ((0, 0), (1, n - 1)):
                if e.mode == LOOP or e.tags[side] != T_JUNCTION:
                    continue
                px, py = e.points[pi]
                best = None
                for k in tree.query_ball_point((px, py), gap - 1e-9):
                    j, pj = owners[k], positions[k]
                    if j == i:
                        continue
                    host = live[j]
                    if host.mode == LINE and pj in (0, len(host.points) - 1):
                        continue
                    qx, qy = coords[k]
                    d = math.hypot(qx - px, qy - py)
                    if d < gap and (best is None or (d, j, pj) < best):
                        best = (d, j, pj)
                if best is None:
                    continue
                _, j, pj = best
                adjacency[i].add(j)
                adjacency[j].add(i)
                live[j].corner_pts.setdefault(pj, (CURVATURE, None))
    corner_list = []
    for i, (e, c) in enumerate(zip(live, contours)):
        for k in sorted(e.corner_pts):
            kind, angle = e.corner_pts[k]
            if kind == CURVATURE and angle is None:
                try:
                    angle = corner_angle(c, k, (JUNCTION_SPAN, JUNCTION_SPAN), JUNCTION_SPAN)
                except ValueError:
                    angle = None
                e.corner_pts[k] = (kind, angle)
            corner_list.append(Corner(i, k, angle, kind))
    return EdgeGraph(ContourSet(contours, width, height), corner_list, adjacency, bridges)
