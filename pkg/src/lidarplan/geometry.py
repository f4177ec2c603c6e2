"""2-D polygon and bounding-box primitives shared by the scene and grid builders.

All polygons are plain sequences of (x, y) vertex pairs in meters, implicitly
closed (last vertex connects back to the first).  Boundary points count as
inside, with a 1e-9 m tolerance, so lattice tests are reproducible.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

# Tolerance for on-boundary ties (meters).
EDGE_EPS = 1e-9

Point = tuple[float, float]


def polygon_area(vertices: Sequence[Point]) -> float:
    """Unsigned shoelace area of a closed polygon."""
    area = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0


def polygon_bounds(vertices: Iterable[Point]) -> tuple[float, float, float, float]:
    """(xmin, ymin, xmax, ymax) over a non-empty vertex list."""
    xs, ys = zip(*vertices)
    return min(xs), min(ys), max(xs), max(ys)


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    """True if point p lies on segment a-b within EDGE_EPS."""
    abx, aby = bx - ax, by - ay
    apx, apy = px - ax, py - ay
    cross = abx * apy - aby * apx
    seg_len = math.hypot(abx, aby)
    if seg_len == 0.0:
        return math.hypot(apx, apy) <= EDGE_EPS
    if abs(cross) / seg_len > EDGE_EPS:
        return False
    dot = apx * abx + apy * aby
    return -EDGE_EPS * seg_len <= dot <= seg_len * seg_len + EDGE_EPS * seg_len


def point_in_polygon(point: Point, vertices: Sequence[Point]) -> bool:
    """Closed point-in-polygon test (boundary counts as inside).

    Even-odd ray crossing with an explicit on-edge pre-check, so points
    within EDGE_EPS of any edge are deterministically inside.
    """
    px, py = point
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if _on_segment(px, py, ax, ay, bx, by):
            return True
    inside = False
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) / (by - ay) * (bx - ax)
            if px < x_cross:
                inside = not inside
    return inside


def points_in_polygon(xs: np.ndarray, ys: np.ndarray, vertices: Sequence[Point]) -> np.ndarray:
    """Vectorized closed point-in-polygon test for flat coordinate arrays.

    Matches point_in_polygon exactly, including the boundary rule.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(vertices)
    inside = np.zeros(xs.shape, dtype=bool)
    on_edge = np.zeros(xs.shape, dtype=bool)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        abx, aby = bx - ax, by - ay
        apx, apy = xs - ax, ys - ay
        seg_len = math.hypot(abx, aby)
        if seg_len == 0.0:
            on_edge |= np.hypot(apx, apy) <= EDGE_EPS
        else:
            cross = abx * apy - aby * apx
            dot = apx * abx + apy * aby
            on_edge |= (
                (np.abs(cross) / seg_len <= EDGE_EPS)
                & (dot >= -EDGE_EPS * seg_len)
                & (dot <= seg_len * seg_len + EDGE_EPS * seg_len)
            )
        crosses = (ay > ys) != (by > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = ax + (ys - ay) / (by - ay) * (bx - ax)
        inside ^= crosses & (xs < x_cross)
    return inside | on_edge


def _segments_properly_intersect(
    a: Point, b: Point, c: Point, d: Point
) -> bool:
    """True if open segments a-b and c-d cross at an interior point."""

    def orient(p: Point, q: Point, r: Point) -> float:
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def polygon_is_simple(vertices: Sequence[Point]) -> bool:
    """True if no two non-adjacent edges cross (O(n^2); polygons are small)."""
    n = len(vertices)
    if n < 3:
        return False
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex by construction
            if _segments_properly_intersect(*edges[i], *edges[j]):
                return False
    return True


def polygon_is_convex(vertices: Sequence[Point]) -> bool:
    """True if every turn has the same sign (collinear runs allowed)."""
    n = len(vertices)
    if n < 3:
        return False
    sign = 0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cx, cy = vertices[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) <= EDGE_EPS:
            continue
        s = 1 if cross > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def point_segment_distance(point: Point, a: Point, b: Point) -> float:
    """Euclidean distance from a point to a closed segment."""
    px, py = point
    ax, ay = a
    bx, by = b
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * abx + (py - ay) * aby) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))


class BoxRTree:
    """Static rectangle tree over item bounding boxes (STR bulk packing).

    Built once, queried many times.  Queries return the matching item ids
    in ascending order so exact containment tests downstream can keep
    first-in-file-order semantics.
    """

    _FANOUT = 8

    def __init__(self, boxes: Sequence[tuple[float, float, float, float]]):
        entries = [(box, idx) for idx, box in enumerate(boxes)]
        # Sort-Tile-Recursive packing: sort by x-center, slice, sort slices by y-center.
        entries.sort(key=lambda e: ((e[0][0] + e[0][2]) / 2.0, e[1]))
        n_slices = max(1, math.ceil(math.sqrt(max(1, len(entries)) / self._FANOUT)))
        slice_size = max(1, math.ceil(len(entries) / n_slices))
        leaves: list[tuple[tuple[float, float, float, float], list[int]]] = []
        for s in range(0, len(entries), slice_size):
            chunk = sorted(
                entries[s : s + slice_size],
                key=lambda e: ((e[0][1] + e[0][3]) / 2.0, e[1]),
            )
            for k in range(0, len(chunk), self._FANOUT):
                group = chunk[k : k + self._FANOUT]
                leaves.append((self._union(b for b, _ in group), [i for _, i in group]))
        self._boxes = list(boxes)
        self._leaves = leaves

    @staticmethod
    def _union(boxes: Iterable[tuple[float, float, float, float]]):
        xmin = ymin = math.inf
        xmax = ymax = -math.inf
        for x0, y0, x1, y1 in boxes:
            xmin, ymin = min(xmin, x0), min(ymin, y0)
            xmax, ymax = max(xmax, x1), max(ymax, y1)
        return xmin, ymin, xmax, ymax

    def query_point(self, x: float, y: float, pad: float = EDGE_EPS) -> list[int]:
        """Ids whose boxes contain (x, y), padded by `pad`, ascending order."""
        hits: list[int] = []
        for (x0, y0, x1, y1), ids in self._leaves:
            if x0 - pad <= x <= x1 + pad and y0 - pad <= y <= y1 + pad:
                for i in ids:
                    bx0, by0, bx1, by1 = self._boxes[i]
                    if bx0 - pad <= x <= bx1 + pad and by0 - pad <= y <= by1 + pad:
                        hits.append(i)
        hits.sort()
        return hits
