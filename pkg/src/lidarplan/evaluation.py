"""Post-solve analysis: budget sweeps, priority-weighting comparisons, a
Monte-Carlo moving-occluder robustness proxy, and SVG coverage maps.

The detection-quality proxies here are geometric (sample density, coverage
under random occluders), not object-detection metrics; reports label them
as proxies.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .discretization import CandidateSet, TargetGrid
from .geometry import point_in_polygon, polygon_area, polygon_bounds
from .raycast import VisibilityGrid, eligible_samples, simulate_sensor, visibility_row
from .scene import Obstacle, Scene, scene_bounds
from .solver import (
    EXACT_LIMIT_DEFAULT,
    Budget,
    Cardinality,
    DeploymentProblem,
    Solution,
    coverage_fraction,
    solve_exact,
    solve_greedy,
)

PROXY_NOTE = (
    "geometric proxy metrics (coverage, sample density, occlusion robustness); "
    "not object-detection accuracy"
)


def _solve_auto(problem: DeploymentProblem, exact_limit: int) -> Solution:
    if problem.grid.rows <= exact_limit:
        return solve_exact(problem, exact_limit)
    return solve_greedy(problem)


@dataclass(frozen=True)
class GainCurve:
    """Objective as a function of budget; failed points carry an error
    string and None entries instead of aborting the sweep."""

    kind: str  # "count" or "budget"
    budgets: tuple[float, ...]
    objectives: tuple[float | None, ...]
    coverages: tuple[float | None, ...]
    methods: tuple[str | None, ...]
    solutions: tuple[Solution | None, ...]
    errors: tuple[str | None, ...]

    def marginal_gains(self) -> list[float | None]:
        """Objective increase per step; None where either endpoint failed."""
        out: list[float | None] = []
        prev: float | None = 0.0
        for obj in self.objectives:
            out.append(obj - prev if obj is not None and prev is not None else None)
            prev = obj
        return out


def gain_curve(
    grid: VisibilityGrid,
    weights: np.ndarray,
    costs: np.ndarray,
    kind: str,
    budgets: Sequence[float],
    exact_limit: int = EXACT_LIMIT_DEFAULT,
) -> GainCurve:
    """Solve the same instance at each budget in an increasing sweep."""
    if kind not in ("count", "budget"):
        raise ValueError(f"kind must be 'count' or 'budget', not {kind!r}")
    budgets = [float(b) for b in budgets]
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be strictly increasing")
    total_w = float(np.asarray(weights).sum())
    objectives, coverages, methods, solutions, errors = [], [], [], [], []
    for b in budgets:
        constraint = Cardinality(int(b)) if kind == "count" else Budget(b)
        try:
            problem = DeploymentProblem(grid, weights, costs, constraint)
            sol = _solve_auto(problem, exact_limit)
        except Exception as exc:  # keep sweeping; mark this point failed
            objectives.append(None)
            coverages.append(None)
            methods.append(None)
            solutions.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
            continue
        objectives.append(sol.objective)
        coverages.append(sol.objective / total_w if total_w > 0 else None)
        methods.append(sol.method)
        solutions.append(sol)
        errors.append(None)
    return GainCurve(
        kind=kind,
        budgets=tuple(budgets),
        objectives=tuple(objectives),
        coverages=tuple(coverages),
        methods=tuple(methods),
        solutions=tuple(solutions),
        errors=tuple(errors),
    )


def write_gain_curve_csv(curve: GainCurve, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["budget", "objective", "coverage", "method"])
        for b, obj, cov, method in zip(
            curve.budgets, curve.objectives, curve.coverages, curve.methods
        ):
            writer.writerow([b, obj, cov, method if method else "failed"])


@dataclass(frozen=True)
class WeightedComparison:
    """Same grid solved with unit weights vs. priority weights.

    Coverage numbers are unweighted fractions of targets covered, overall
    and restricted to the high-priority region (targets with weight > 1).
    """

    vanilla: Solution
    weighted: Solution
    vanilla_overall: float
    weighted_overall: float
    vanilla_priority: float
    weighted_priority: float
    n_priority: int


def compare_weighted(
    grid: VisibilityGrid,
    weights: np.ndarray,
    costs: np.ndarray,
    constraint,
    exact_limit: int = EXACT_LIMIT_DEFAULT,
) -> WeightedComparison:
    """Solve once with all weights 1 and once with the given weights."""
    weights = np.asarray(weights, dtype=np.float64)
    priority = weights > 1
    if not priority.any():
        raise ValueError("no high-priority targets: every weight is <= 1")
    unit = np.ones_like(weights)
    vanilla = _solve_auto(DeploymentProblem(grid, unit, costs, constraint), exact_limit)
    weighted = _solve_auto(DeploymentProblem(grid, weights, costs, constraint), exact_limit)

    def frac(sol: Solution, mask: np.ndarray) -> float:
        hits = sum(1 for j in sol.covered if mask[j])
        return hits / int(mask.sum())

    everywhere = np.ones(grid.cols, dtype=bool)
    return WeightedComparison(
        vanilla=vanilla,
        weighted=weighted,
        vanilla_overall=frac(vanilla, everywhere),
        weighted_overall=frac(weighted, everywhere),
        vanilla_priority=frac(vanilla, priority),
        weighted_priority=frac(weighted, priority),
        n_priority=int(priority.sum()),
    )


@dataclass(frozen=True)
class VehicleModel:
    """Axis-aligned occluder boxes standing in for parked/moving vehicles.

    Defaults approximate a typical sedan; count is the fixed number dropped
    per trial.
    """

    length: float = 4.5
    width: float = 2.0
    height: float = 1.6
    count: int = 4

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("vehicle dimensions must be > 0")
        if self.count < 0:
            raise ValueError("vehicle count must be >= 0")


@dataclass(frozen=True)
class OcclusionReport:
    trials: int
    mean_coverage: float
    min_coverage: float
    static_coverage: float
    seed: int
    per_trial: tuple[float, ...]
    vehicle: VehicleModel


def _sample_vehicles(scene: Scene, vehicle: VehicleModel,
                     rng: np.random.Generator) -> list[Obstacle]:
    """Drop vehicle boxes uniformly over the road area, sequentially from
    one stream so a larger count extends a smaller one's draw."""
    segments = scene.road_segments
    areas = np.array([polygon_area(s.polygon) for s in segments])
    probs = areas / areas.sum()
    boxes: list[Obstacle] = []
    for k in range(vehicle.count):
        seg = segments[int(rng.choice(len(segments), p=probs))]
        bx0, by0, bx1, by1 = polygon_bounds(seg.polygon)
        cx = cy = None
        for _ in range(10000):
            px = rng.uniform(bx0, bx1)
            py = rng.uniform(by0, by1)
            if point_in_polygon((px, py), seg.polygon):
                cx, cy = px, py
                break
        if cx is None:
            continue
        # Heading snaps to the segment's longer bbox axis.
        if bx1 - bx0 >= by1 - by0:
            hx, hy = vehicle.length / 2, vehicle.width / 2
        else:
            hx, hy = vehicle.width / 2, vehicle.length / 2
        boxes.append(
            Obstacle(
                id=f"vehicle_{k}",
                footprint=(
                    (cx - hx, cy - hy),
                    (cx + hx, cy - hy),
                    (cx + hx, cy + hy),
                    (cx - hx, cy + hy),
                ),
                height=vehicle.height,
            )
        )
    return boxes


def occlusion_monte_carlo(
    solution: Solution,
    scene: Scene,
    targets: TargetGrid,
    candidates: CandidateSet,
    vehicle: VehicleModel,
    trials: int,
    seed: int,
    delta: float,
    intensity_min: float | None = None,
) -> OcclusionReport:
    """Coverage of the chosen deployment under randomly placed vehicle
    boxes, re-raycasting only the selected sensors each trial.

    Each trial uses the substream (seed, trial), so reports are pure
    functions of the inputs and the seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    weights = targets.weights
    total_w = float(weights.sum())
    if total_w <= 0:
        raise ValueError("total target weight must be > 0")
    static_cov = coverage_fraction(solution, weights)
    coverages = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        boxes = _sample_vehicles(scene, vehicle, rng)
        trial_scene = scene.with_extra_obstacles(boxes)
        covered = np.zeros(len(targets), dtype=bool)
        for i in solution.selected:
            cloud = simulate_sensor(candidates[i], trial_scene, sensor_index=i)
            covered |= visibility_row(
                cloud, targets, delta, intensity_min, scene.ground_elevation
            )
        coverages.append(float(weights[covered].sum()) / total_w)
    return OcclusionReport(
        trials=trials,
        mean_coverage=float(np.mean(coverages)),
        min_coverage=float(np.min(coverages)),
        static_coverage=static_cov,
        seed=seed,
        per_trial=tuple(coverages),
        vehicle=vehicle,
    )


def sample_density(
    solution: Solution,
    scene: Scene,
    targets: TargetGrid,
    candidates: CandidateSet,
    delta: float,
    intensity_min: float | None = None,
) -> np.ndarray:
    """Eligible samples within delta of each target, summed over the
    selected sensors.  A density proxy for how strongly each cell is
    observed; uses a closed radius, unlike the strict visibility test."""
    counts = np.zeros(len(targets), dtype=np.int64)
    for i in solution.selected:
        cloud = simulate_sensor(candidates[i], scene, sensor_index=i)
        good = eligible_samples(cloud.samples, scene.ground_elevation, intensity_min)
        if len(good) == 0:
            continue
        tree = cKDTree(good[:, :2])
        counts += tree.query_ball_point(targets.points, r=delta, return_length=True)
    return counts


_SVG_COLORS = {
    "background": "#f7f7f5",
    "road": "#d8d8d8",
    "road_edge": "#b9b9b9",
    "cell": "#c9c9c9",
    "obstacle": "#8f8f8f",
    "obstacle_edge": "#5f5f5f",
    "covered": "#d62728",
    "uncovered_edge": "#9a9a9a",
    "sensor": "#2ca02c",
    "label": "#1a5e1a",
}


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_coverage_map(
    scene: Scene,
    targets: TargetGrid,
    grid: VisibilityGrid,
    solution: Solution,
    candidates: Sequence,
    path: str | Path,
) -> None:
    """Write an SVG map: roads, obstacles, target cells (covered ones as
    filled red dots, uncovered hollow), and the selected sensors as green
    circles labeled type@height.

    Output is plain text with fixed ordering and 3-decimal coordinates, so
    identical inputs give byte-identical files.
    """
    xmin, ymin, xmax, ymax = scene_bounds(scene)
    for c in candidates:
        xmin, xmax = min(xmin, c.x), max(xmax, c.x)
        ymin, ymax = min(ymin, c.y), max(ymax, c.y)
    margin = 2.0 * targets.spacing
    xmin, ymin, xmax, ymax = xmin - margin, ymin - margin, xmax + margin, ymax + margin
    scale = 8.0
    width, height = (xmax - xmin) * scale, (ymax - ymin) * scale

    def sx(x: float) -> str:
        return _fmt((x - xmin) * scale)

    def sy(y: float) -> str:
        return _fmt((ymax - y) * scale)  # flip: SVG y grows downward

    def poly(points, fill, stroke, width_px=1.0, opacity=None) -> str:
        pts = " ".join(f"{sx(px)},{sy(py)}" for px, py in points)
        extra = f' fill-opacity="{opacity}"' if opacity is not None else ""
        return (
            f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width_px}"{extra}/>'
        )

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f"<title>coverage {_fmt(100.0 * len(solution.covered) / max(1, grid.cols))}% "
        f"({solution.method})</title>",
        f'<rect width="100%" height="100%" fill="{_SVG_COLORS["background"]}"/>',
    ]
    for seg in scene.road_segments:
        lines.append(poly(seg.polygon, _SVG_COLORS["road"], _SVG_COLORS["road_edge"]))
    half = targets.spacing / 2.0
    r_dot = _fmt(targets.spacing * 0.15 * scale)
    for k in range(len(targets)):
        x, y = targets.points[k]
        lines.append(
            f'<rect x="{sx(x - half)}" y="{sy(y + half)}" '
            f'width="{_fmt(targets.spacing * scale)}" height="{_fmt(targets.spacing * scale)}" '
            f'fill="none" stroke="{_SVG_COLORS["cell"]}" stroke-width="0.5"/>'
        )
    for obstacle in scene.obstacles:
        lines.append(
            poly(
                obstacle.footprint,
                _SVG_COLORS["obstacle"],
                _SVG_COLORS["obstacle_edge"],
                opacity=0.9,
            )
        )
    for k in range(len(targets)):
        x, y = targets.points[k]
        if k in solution.covered:
            lines.append(
                f'<circle cx="{sx(x)}" cy="{sy(y)}" r="{r_dot}" '
                f'fill="{_SVG_COLORS["covered"]}"/>'
            )
        else:
            lines.append(
                f'<circle cx="{sx(x)}" cy="{sy(y)}" r="{r_dot}" fill="#ffffff" '
                f'stroke="{_SVG_COLORS["uncovered_edge"]}" stroke-width="0.8"/>'
            )
    r_sensor = _fmt(targets.spacing * 0.3 * scale)
    font = _fmt(targets.spacing * 0.55 * scale)
    for i in solution.selected:
        c = candidates[i]
        type_id = c.sensor.type_id if hasattr(c, "sensor") else c.type_id
        lines.append(
            f'<circle cx="{sx(c.x)}" cy="{sy(c.y)}" r="{r_sensor}" '
            f'fill="{_SVG_COLORS["sensor"]}" stroke="#ffffff" stroke-width="1.5"/>'
        )
        lines.append(
            f'<text x="{sx(c.x)}" y="{_fmt(float(sy(c.y)) - float(r_sensor) - 4.0)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="{font}" '
            f'fill="{_SVG_COLORS["label"]}">{type_id}@{c.height:g}m</text>'
        )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
