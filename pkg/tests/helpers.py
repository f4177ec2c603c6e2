"""Independent reference implementations used as test oracles.

Everything here is written against the problem statement, not the library
internals: different algorithms, plain loops, no imports from the package's
geometry or search code paths beyond the public dataclasses they validate.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull

from lidarplan import Budget, Cardinality


# ---------------------------------------------------------------------------
# Point-in-polygon oracle: winding-number formulation with an explicit
# on-boundary distance check (the library uses even-odd crossing counts).

BOUNDARY_TOL = 1e-9


def _seg_dist(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 == 0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * vx + (py - ay) * vy) / L2))
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy))


def point_in_polygon_ref(point, vertices) -> bool:
    px, py = point
    n = len(vertices)
    for k in range(n):
        ax, ay = vertices[k]
        bx, by = vertices[(k + 1) % n]
        if _seg_dist(px, py, ax, ay, bx, by) <= BOUNDARY_TOL:
            return True  # closed polygons: boundary counts as inside
    winding = 0
    for k in range(n):
        ax, ay = vertices[k]
        bx, by = vertices[(k + 1) % n]
        if ay <= py:
            if by > py and (bx - ax) * (py - ay) - (by - ay) * (px - ax) > 0:
                winding += 1
        else:
            if by <= py and (bx - ax) * (py - ay) - (by - ay) * (px - ax) < 0:
                winding -= 1
    return winding != 0


# ---------------------------------------------------------------------------
# Exhaustive deployment oracle: enumerate every candidate subset by doubling.


def exhaustive_best(rows: np.ndarray, weights: np.ndarray, costs: np.ndarray,
                    constraint) -> float:
    """Optimal objective over all 2^n subsets (n small)."""
    rows = np.asarray(rows, dtype=bool)
    union = np.zeros((1, rows.shape[1]), dtype=bool)
    total_cost = np.zeros(1)
    size = np.zeros(1, dtype=np.int64)
    for i in range(rows.shape[0]):
        union = np.vstack([union, union | rows[i]])
        total_cost = np.concatenate([total_cost, total_cost + costs[i]])
        size = np.concatenate([size, size + 1])
    objectives = union @ np.asarray(weights, dtype=np.float64)
    if isinstance(constraint, Budget):
        feasible = total_cost <= constraint.limit + 1e-12
    else:
        feasible = size <= constraint.limit
    return float(objectives[feasible].max())


def random_instance(rng: np.random.Generator, max_rows: int = 15, max_cols: int = 60):
    """One random deployment instance plus both constraint forms."""
    n = int(rng.integers(1, max_rows + 1))
    m = int(rng.integers(1, max_cols + 1))
    density = rng.uniform(0.1, 0.6)
    rows = rng.random((n, m)) < density
    if rng.random() < 0.3:
        weights = rng.integers(0, 10, m).astype(np.float64)
    else:
        weights = rng.uniform(0.0, 10.0, m)
    costs = rng.uniform(1.0, 20.0, n)
    budget = Budget(float(rng.uniform(0.0, costs.sum() * 0.7)))
    count = Cardinality(int(rng.integers(0, n + 1)))
    return rows, weights, costs, budget, count


# ---------------------------------------------------------------------------
# Scalar reference ray caster: per-face plane intersections (the library
# clips against half-plane slabs instead).


def _ray_vertical_quad(o, d, a, b, zlo, zhi):
    """Hit t of the vertical rectangle swept by edge a-b, or None."""
    ex, ey = b[0] - a[0], b[1] - a[1]
    nx, ny = ey, -ex
    denom = nx * d[0] + ny * d[1]
    if abs(denom) < 1e-15:
        return None
    t = (nx * (a[0] - o[0]) + ny * (a[1] - o[1])) / denom
    if t <= 1e-9:
        return None
    px, py, pz = o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]
    L2 = ex * ex + ey * ey
    s = ((px - a[0]) * ex + (py - a[1]) * ey) / L2
    if -1e-9 <= s <= 1 + 1e-9 and zlo - 1e-9 <= pz <= zhi + 1e-9:
        return t
    return None


def _ray_horizontal_face(o, d, z_face, vertices):
    if abs(d[2]) < 1e-15:
        return None
    t = (z_face - o[2]) / d[2]
    if t <= 1e-9:
        return None
    p = (o[0] + t * d[0], o[1] + t * d[1])
    if point_in_polygon_ref(p, vertices):
        return t
    return None


def cast_ray_ref(origin, direction, scene, max_range):
    """Nearest hit as (t, x, y, z, on_ground) or None.

    Collects every face crossing and takes the minimum, which matches the
    from-inside semantics of the library (first boundary on the way out).
    """
    o = tuple(float(v) for v in origin)
    d = tuple(float(v) for v in direction)
    g = scene.ground_elevation
    best = None
    on_ground = False
    if d[2] < 0:
        t = (g - o[2]) / d[2]
        if t > 1e-9:
            best, on_ground = t, True
    for obstacle in scene.obstacles:
        verts = list(obstacle.footprint)
        zhi = g + obstacle.height
        hits = []
        for k in range(len(verts)):
            t = _ray_vertical_quad(o, d, verts[k], verts[(k + 1) % len(verts)], g, zhi)
            if t is not None:
                hits.append(t)
        for z_face in (g, zhi):
            t = _ray_horizontal_face(o, d, z_face, verts)
            if t is not None:
                hits.append(t)
        if hits and (best is None or min(hits) < best):
            best, on_ground = min(hits), False
    if best is None or best > max_range:
        return None
    x, y, z = o[0] + best * d[0], o[1] + best * d[1], o[2] + best * d[2]
    if on_ground:
        z = g
    return best, x, y, z, on_ground


def brute_force_visibility(clouds, targets_xy, delta, ground_z,
                           intensity_min=None) -> np.ndarray:
    """Quadratic loop over (sample, target) pairs; ground returns only."""
    n_s, n_t = len(clouds), len(targets_xy)
    bits = np.zeros((n_s, n_t), dtype=bool)
    for i, cloud in enumerate(clouds):
        for sample in cloud.samples:
            if sample[2] != ground_z:
                continue
            if intensity_min is not None and sample[3] < intensity_min:
                continue
            for j, (tx, ty) in enumerate(targets_xy):
                if math.hypot(sample[0] - tx, sample[1] - ty) < delta:
                    bits[i, j] = True
    return bits


def convex_polygon(rng: np.random.Generator, cx, cy, r_lo, r_hi, n_lo=3, n_hi=7):
    """Random convex polygon around (cx, cy): convex hull of ring points.

    Angle-sorted points on a radius band are only star-shaped, so the hull
    step is what makes the result genuinely convex.
    """
    while True:
        n = int(rng.integers(max(n_lo, 3), n_hi + 1)) + 2
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
        radii = rng.uniform(r_lo, r_hi, n)
        pts = np.column_stack(
            [cx + radii * np.cos(angles), cy + radii * np.sin(angles)]
        )
        hull = ConvexHull(pts)
        if len(hull.vertices) >= 3:
            return tuple((float(x), float(y)) for x, y in pts[hull.vertices])
