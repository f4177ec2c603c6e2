"""Lattice discretization of the region of interest and the mount zones.

Turns continuous road polygons into a finite set of target points and the
mount zones into a finite set of sensor placement candidates.  Both lattices
use the same rule: uniformly spaced coordinates strictly inside the
bounding box of the relevant geometry (the first lattice line sits one
spacing step past the minimum, the last strictly before the maximum).
Points exactly on a polygon edge count as inside, with tolerance 1e-9 m.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import (
    EDGE_EPS,
    BoxRTree,
    Point,
    point_in_polygon,
    point_segment_distance,
    points_in_polygon,
    polygon_bounds,
)
from .scene import Scene, SensorSpec, scene_bounds

TARGETS_CSV_HEADER = ["idx", "x", "y", "weight", "segment"]
CANDIDATES_CSV_HEADER = ["idx", "x", "y", "height", "type", "cost"]


class EmptyGridError(ValueError):
    """No lattice point fell inside any containing geometry."""


@dataclass(frozen=True)
class TargetGrid:
    """Discretized region of interest.

    points[k] is the k-th lattice point (row-major: y outer, x inner),
    weights[k] its priority weight, segment_of[k] the id of the first road
    segment in file order that contains it.
    """

    spacing: float
    points: np.ndarray  # (N, 2) float64
    weights: np.ndarray  # (N,) float64
    segment_of: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def reweighted(self, segment_weights: dict[str, float]) -> "TargetGrid":
        """Copy with per-segment weight overrides applied."""
        new = self.weights.copy()
        for k, seg in enumerate(self.segment_of):
            if seg in segment_weights:
                new[k] = segment_weights[seg]
        return TargetGrid(self.spacing, self.points, new, self.segment_of)


@dataclass(frozen=True)
class Candidate:
    """One feasible placement: position on the mount lattice, a mounting
    height drawn from the containing zone, and a sensor type."""

    x: float
    y: float
    height: float
    sensor: SensorSpec
    cost: float
    zone_id: str


@dataclass(frozen=True)
class CandidateSet:
    spacing: float
    candidates: tuple[Candidate, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def __getitem__(self, i: int) -> Candidate:
        return self.candidates[i]

    @property
    def costs(self) -> np.ndarray:
        return np.array([c.cost for c in self.candidates], dtype=np.float64)


def lattice_coords(lo: float, hi: float, spacing: float) -> np.ndarray:
    """Uniform coordinates strictly between lo and hi: lo + k*spacing, k >= 1.

    When (hi - lo) is an exact multiple of spacing the endpoint is excluded.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    n = int(np.floor((hi - lo) / spacing - EDGE_EPS))
    return lo + spacing * np.arange(1, n + 1, dtype=np.float64)


class SegmentIndex:
    """Bounding-box tree over road segments with exact polygon membership.

    Queries return the first containing segment in scene file order, which
    makes overlapping-segment ties deterministic.
    """

    def __init__(self, scene: Scene):
        self._segments = scene.road_segments
        self._tree = BoxRTree([polygon_bounds(s.polygon) for s in self._segments])

    def segment_id_at(self, x: float, y: float) -> str | None:
        for i in self._tree.query_point(x, y):
            if point_in_polygon((x, y), self._segments[i].polygon):
                return self._segments[i].id
        return None


def point_in_roi(scene: Scene, point: Point, index: SegmentIndex | None = None) -> str | None:
    """Id of the first road segment in file order containing the point, else None."""
    if index is None:
        index = SegmentIndex(scene)
    return index.segment_id_at(point[0], point[1])


def discretize_roi(scene: Scene, spacing: float) -> TargetGrid:
    """Lattice points strictly inside the ROI bounding box that fall inside
    at least one road segment, in row-major (y outer, x inner) order.

    Raises EmptyGridError when the spacing is too coarse to produce any
    point inside a segment.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    xmin, ymin, xmax, ymax = scene_bounds(scene)
    if spacing >= xmax - xmin or spacing >= ymax - ymin:
        raise EmptyGridError(
            f"spacing {spacing} is not smaller than the ROI extent "
            f"({xmax - xmin} x {ymax - ymin})"
        )
    xs = lattice_coords(xmin, xmax, spacing)
    ys = lattice_coords(ymin, ymax, spacing)
    gx, gy = np.meshgrid(xs, ys)  # row-major: y varies along axis 0
    flat_x, flat_y = gx.ravel(), gy.ravel()

    # Assign each lattice point the first containing segment in file order.
    owner = np.full(flat_x.shape, -1, dtype=np.int64)
    for k, seg in enumerate(scene.road_segments):
        bx0, by0, bx1, by1 = polygon_bounds(seg.polygon)
        near = (
            (flat_x >= bx0 - EDGE_EPS)
            & (flat_x <= bx1 + EDGE_EPS)
            & (flat_y >= by0 - EDGE_EPS)
            & (flat_y <= by1 + EDGE_EPS)
            & (owner == -1)
        )
        if not near.any():
            continue
        inside = points_in_polygon(flat_x[near], flat_y[near], seg.polygon)
        hits = np.flatnonzero(near)[inside]
        owner[hits] = k

    keep = owner >= 0
    if not keep.any():
        raise EmptyGridError(
            f"no lattice point at spacing {spacing} falls inside any road segment"
        )
    points = np.column_stack([flat_x[keep], flat_y[keep]])
    seg_ids = tuple(scene.road_segments[k].id for k in owner[keep])
    weight_by_seg = {s.id: s.priority_weight for s in scene.road_segments}
    weights = np.array([weight_by_seg[s] for s in seg_ids], dtype=np.float64)
    return TargetGrid(spacing=spacing, points=points, weights=weights, segment_of=seg_ids)


def _zone_contains(zone_geometry: tuple[Point, ...], kind: str, x: float, y: float,
                   spacing: float) -> bool:
    if kind == "polygon":
        return point_in_polygon((x, y), zone_geometry)
    # Polyline zones are corridors half a lattice spacing to each side.
    half = spacing / 2.0
    for a, b in zip(zone_geometry[:-1], zone_geometry[1:]):
        if point_segment_distance((x, y), a, b) <= half + EDGE_EPS:
            return True
    return False


def enumerate_candidates(
    scene: Scene, spacing: float, types: Sequence[SensorSpec]
) -> CandidateSet:
    """Cartesian product of mount-lattice positions, allowed heights, and
    sensor types.

    Positions are lattice points strictly inside the bounding box of the
    union of mount-zone geometries; each position belongs to the first zone
    in file order that contains it.  Ordering is position (row-major), then
    the zone's height list, then catalog order of the requested types.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    if not types:
        raise ValueError("types must be non-empty")
    # Keep catalog file order regardless of the caller's list order.
    requested = {t.type_id for t in types}
    specs = [s for s in scene.catalog if s.type_id in requested]
    if not specs:
        specs = list(types)  # types not drawn from scene.catalog (tests)

    all_pts = [p for z in scene.mount_zones for p in z.geometry]
    xmin, ymin, xmax, ymax = polygon_bounds(all_pts)
    xs = lattice_coords(xmin, xmax, spacing)
    ys = lattice_coords(ymin, ymax, spacing)

    out: list[Candidate] = []
    for y in ys:
        for x in xs:
            zone = next(
                (
                    z
                    for z in scene.mount_zones
                    if _zone_contains(z.geometry, z.kind, x, y, spacing)
                ),
                None,
            )
            if zone is None:
                continue
            for h in zone.allowed_heights:
                for spec in specs:
                    out.append(
                        Candidate(
                            x=float(x),
                            y=float(y),
                            height=float(h),
                            sensor=spec,
                            cost=spec.unit_cost + zone.install_surcharge,
                            zone_id=zone.id,
                        )
                    )
    if not out:
        raise EmptyGridError(
            f"no lattice point at spacing {spacing} falls inside any mount zone"
        )
    return CandidateSet(spacing=spacing, candidates=tuple(out))


def write_targets_csv(grid: TargetGrid, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TARGETS_CSV_HEADER)
        for k in range(len(grid)):
            writer.writerow(
                [k, grid.points[k, 0], grid.points[k, 1], grid.weights[k], grid.segment_of[k]]
            )


def read_targets_csv(path: str | Path) -> TargetGrid:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TARGETS_CSV_HEADER:
            raise ValueError(
                f"{path}: bad targets header {header!r}, expected {TARGETS_CSV_HEADER!r}"
            )
        xs, ys, ws, segs = [], [], [], []
        for row in reader:
            xs.append(float(row[1]))
            ys.append(float(row[2]))
            ws.append(float(row[3]))
            segs.append(row[4])
    points = np.column_stack([xs, ys]) if xs else np.zeros((0, 2))
    return TargetGrid(
        spacing=_infer_spacing(points),
        points=points,
        weights=np.asarray(ws, dtype=np.float64),
        segment_of=tuple(segs),
    )


def _infer_spacing(points: np.ndarray) -> float:
    """Smallest positive gap between lattice lines; 1.0 for degenerate input."""
    gaps = []
    for axis in (0, 1):
        vals = np.unique(points[:, axis]) if len(points) else np.array([])
        if len(vals) > 1:
            gaps.append(float(np.diff(vals).min()))
    return min(gaps) if gaps else 1.0


def write_candidates_csv(cands: CandidateSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CANDIDATES_CSV_HEADER)
        for k, c in enumerate(cands.candidates):
            writer.writerow([k, c.x, c.y, c.height, c.sensor.type_id, c.cost])


@dataclass(frozen=True)
class CandidateRecord:
    """Candidate row as stored on disk (sensor referenced by type id only)."""

    x: float
    y: float
    height: float
    type_id: str
    cost: float


def read_candidates_csv(path: str | Path) -> list[CandidateRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CANDIDATES_CSV_HEADER:
            raise ValueError(
                f"{path}: bad candidates header {header!r}, expected {CANDIDATES_CSV_HEADER!r}"
            )
        return [
            CandidateRecord(float(r[1]), float(r[2]), float(r[3]), r[4], float(r[5]))
            for r in reader
        ]
