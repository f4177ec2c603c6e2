import math

import numpy as np
import pytest

from helpers import exhaustive_best, random_instance
from lidarplan import (
    Budget,
    Candidate,
    Cardinality,
    DeploymentProblem,
    MountZone,
    RoadSegment,
    Scene,
    SensorSpec,
    VehicleModel,
    VisibilityGrid,
    build_visibility_grid,
    compare_weighted,
    discretize_roi,
    gain_curve,
    occlusion_monte_carlo,
    render_coverage_map,
    sample_density,
    solve_exact,
    solve_greedy,
)
from lidarplan.evaluation import PROXY_NOTE, write_gain_curve_csv


def rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


class ListCandidates:
    def __init__(self, cands):
        self.candidates = tuple(cands)
        self.spacing = 1.0

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]


# ---------------------------------------------------------------------------
# gain curves


def test_gain_curve_demo_saturates(demo_grid_t3, demo_targets, demo_candidates_t3):
    curve = gain_curve(
        demo_grid_t3,
        demo_targets.weights,
        demo_candidates_t3.costs,
        kind="count",
        budgets=[1, 2, 3, 4],
    )
    assert all(m == "exact" for m in curve.methods)
    objs = list(curve.objectives)
    assert objs == sorted(objs)
    assert objs[-1] == objs[-2]  # saturated: the 4th unit adds nothing
    gains = curve.marginal_gains()
    assert gains[-1] == 0.0
    assert curve.coverages[-1] == 1.0


def test_gain_curve_single_candidate_flat():
    bits = np.array([[1, 1, 0, 1]], dtype=bool)
    curve = gain_curve(
        VisibilityGrid(bits=bits, delta=1.0),
        np.ones(4),
        np.ones(1),
        kind="count",
        budgets=[1, 2, 3],
    )
    assert curve.objectives == (3.0, 3.0, 3.0)
    assert curve.marginal_gains() == [3.0, 0.0, 0.0]


def test_gain_curve_monotone_on_random_instances(rng):
    for _ in range(15):
        rows, weights, costs, _, _ = random_instance(rng, 9, 25)
        grid = VisibilityGrid(bits=rows, delta=1.0)
        curve = gain_curve(
            grid, weights, costs, kind="count",
            budgets=list(range(1, rows.shape[0] + 1)),
        )
        objs = [o for o in curve.objectives if o is not None]
        assert len(objs) == len(curve.objectives)
        assert all(a <= b + 1e-12 for a, b in zip(objs, objs[1:]))
        sweep = np.linspace(costs.min(), costs.sum(), 4)
        curve_b = gain_curve(
            grid, weights, costs, kind="budget", budgets=sorted(set(map(float, sweep)))
        )
        objs_b = [o for o in curve_b.objectives if o is not None]
        assert all(a <= b + 1e-12 for a, b in zip(objs_b, objs_b[1:]))


def test_gain_curve_marks_failed_points_and_continues():
    bits = np.array([[1, 0], [0, 1]], dtype=bool)
    grid = VisibilityGrid(bits=bits, delta=1.0)
    curve = gain_curve(grid, np.ones(2), np.ones(2), kind="count", budgets=[-5, 1, 2])
    assert curve.objectives[0] is None
    assert curve.errors[0] is not None and "ValueError" in curve.errors[0]
    assert curve.objectives[1] == 1.0
    assert curve.objectives[2] == 2.0
    assert curve.marginal_gains()[1] is None  # previous point failed


def test_gain_curve_rejects_bad_inputs():
    grid = VisibilityGrid(bits=np.ones((1, 2), dtype=bool), delta=1.0)
    with pytest.raises(ValueError, match="increasing"):
        gain_curve(grid, np.ones(2), np.ones(1), kind="count", budgets=[2, 2])
    with pytest.raises(ValueError, match="kind"):
        gain_curve(grid, np.ones(2), np.ones(1), kind="price", budgets=[1])


def test_gain_curve_csv(tmp_path):
    bits = np.array([[1, 0], [0, 1]], dtype=bool)
    grid = VisibilityGrid(bits=bits, delta=1.0)
    curve = gain_curve(grid, np.ones(2), np.ones(2), kind="count", budgets=[-1, 1])
    path = tmp_path / "curve.csv"
    write_gain_curve_csv(curve, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "budget,objective,coverage,method"
    assert lines[1].endswith("failed")
    assert "exact" in lines[2]


# ---------------------------------------------------------------------------
# weighted-vs-vanilla comparison


def test_compare_weighted_demo_prioritizes_center(
    demo_grid_t1, demo_targets, demo_candidates_t1
):
    weights = demo_targets.reweighted({"central": 10.0}).weights
    cmp = compare_weighted(
        demo_grid_t1, weights, demo_candidates_t1.costs, Cardinality(4)
    )
    assert cmp.n_priority == 36
    assert cmp.weighted_priority >= cmp.vanilla_priority
    assert cmp.weighted.objective >= cmp.vanilla.objective


def test_compare_weighted_uniform_weights_rejected():
    grid = VisibilityGrid(bits=np.ones((2, 3), dtype=bool), delta=1.0)
    with pytest.raises(ValueError, match="high-priority"):
        compare_weighted(grid, np.ones(3), np.ones(2), Cardinality(1))


def test_compare_weighted_equal_weights_above_one(rng):
    # uniformly doubled weights change nothing about the choice
    for _ in range(10):
        rows, _, costs, _, count = random_instance(rng, 8, 20)
        grid = VisibilityGrid(bits=rows, delta=1.0)
        cmp = compare_weighted(grid, np.full(rows.shape[1], 2.0), costs, count)
        assert cmp.vanilla.selected == cmp.weighted.selected
        assert cmp.vanilla_overall == cmp.weighted_overall
        assert math.isclose(cmp.weighted.objective, 2.0 * cmp.vanilla.objective,
                            rel_tol=1e-12)


def test_compare_weighted_hot_target_covered_by_all():
    bits = np.array([[1, 1, 0], [1, 0, 1]], dtype=bool)  # target 0 seen by both
    grid = VisibilityGrid(bits=bits, delta=1.0)
    weights = np.array([5.0, 1.0, 1.0])
    cmp = compare_weighted(grid, weights, np.ones(2), Cardinality(1))
    assert cmp.n_priority == 1
    assert cmp.vanilla_priority == 1.0
    assert cmp.weighted_priority == 1.0


def test_compare_weighted_objective_dominance(rng):
    # the weighted run can never do worse under its own objective than the
    # vanilla selection evaluated with the same weights
    for _ in range(20):
        rows, weights, costs, budget, count = random_instance(rng, 9, 20)
        weights = weights + 1.5  # ensure a priority region exists
        grid = VisibilityGrid(bits=rows, delta=1.0)
        for constraint in (budget, count):
            cmp = compare_weighted(grid, weights, costs, constraint)
            vanilla_under_w = float(weights[list(cmp.vanilla.covered)].sum())
            assert cmp.weighted.objective >= vanilla_under_w - 1e-9


# ---------------------------------------------------------------------------
# occlusion Monte-Carlo


def micro_setup():
    scene = Scene(
        road_segments=(RoadSegment(id="r", polygon=rect(-20, -20, 20, 20)),),
        mount_zones=(MountZone(id="z", geometry=rect(-18, -18, 18, 18),
                               allowed_heights=(6.0,)),),
    )
    targets = discretize_roi(scene, spacing=5.0)
    s = SensorSpec(
        type_id="t",
        channels=12,
        vertical_fov_min=-25.0,
        vertical_fov_max=-2.0,
        horizontal_fov=360.0,
        range_m=80.0,
        unit_cost=10.0,
        azimuth_step=6.0,
    )
    cands = ListCandidates([
        Candidate(x=-10.0, y=-10.0, height=6.0, sensor=s, cost=10.0, zone_id="z"),
        Candidate(x=10.0, y=10.0, height=6.0, sensor=s, cost=10.0, zone_id="z"),
    ])
    grid = build_visibility_grid(cands, targets, scene, delta=2.5)
    problem = DeploymentProblem(grid, targets.weights, np.full(2, 10.0), Cardinality(2))
    solution = solve_exact(problem)
    return scene, targets, cands, solution


def test_occlusion_zero_vehicles_equals_static():
    scene, targets, cands, solution = micro_setup()
    report = occlusion_monte_carlo(
        solution, scene, targets, cands,
        VehicleModel(count=0), trials=3, seed=11, delta=2.5,
    )
    assert report.per_trial == (report.static_coverage,) * 3
    assert report.mean_coverage == report.static_coverage
    assert report.min_coverage == report.static_coverage


def test_occlusion_same_seed_identical_and_prefix_stable():
    scene, targets, cands, solution = micro_setup()
    kwargs = dict(vehicle=VehicleModel(count=3), seed=42, delta=2.5)
    a = occlusion_monte_carlo(solution, scene, targets, cands, trials=4, **kwargs)
    b = occlusion_monte_carlo(solution, scene, targets, cands, trials=4, **kwargs)
    assert a == b
    short = occlusion_monte_carlo(solution, scene, targets, cands, trials=2, **kwargs)
    assert short.per_trial == a.per_trial[:2]  # per-trial substreams


def test_occlusion_bounds_and_order():
    scene, targets, cands, solution = micro_setup()
    report = occlusion_monte_carlo(
        solution, scene, targets, cands,
        VehicleModel(count=4), trials=6, seed=5, delta=2.5,
    )
    assert report.min_coverage <= report.mean_coverage <= report.static_coverage
    assert all(0.0 <= c <= report.static_coverage + 1e-12 for c in report.per_trial)


def test_occlusion_single_blocking_vehicle():
    # one beam, one reachable cell, and a road so small that any vehicle
    # drawn on it must interrupt the sightline
    elevation = -math.degrees(math.atan2(5.0, 20.0))
    s = SensorSpec(
        type_id="t",
        channels=1,
        vertical_fov_min=elevation,
        vertical_fov_max=elevation,
        horizontal_fov=360.0,
        range_m=50.0,
        unit_cost=1.0,
        azimuth_step=360.0,  # single beam along +x
    )
    scene = Scene(
        road_segments=(RoadSegment(id="r", polygon=rect(19.5, -0.5, 20.5, 0.5)),),
        mount_zones=(MountZone(id="z", geometry=rect(-1, -1, 1, 1),
                               allowed_heights=(5.0,)),),
    )
    targets = discretize_roi(scene, spacing=0.3)
    cands = ListCandidates(
        [Candidate(x=0.0, y=0.0, height=5.0, sensor=s, cost=1.0, zone_id="z")]
    )
    grid = build_visibility_grid(cands, targets, scene, delta=0.8)
    assert grid.bits.all()  # statically the lone ground return covers all
    problem = DeploymentProblem(grid, targets.weights, np.ones(1), Cardinality(1))
    solution = solve_exact(problem)
    report = occlusion_monte_carlo(
        solution, scene, targets, cands,
        VehicleModel(count=1), trials=5, seed=3, delta=0.8,
    )
    assert report.static_coverage == 1.0
    assert report.per_trial == (0.0,) * 5
    assert report.mean_coverage == 0.0


def test_occlusion_validates_inputs():
    scene, targets, cands, solution = micro_setup()
    with pytest.raises(ValueError, match="trials"):
        occlusion_monte_carlo(solution, scene, targets, cands,
                              VehicleModel(count=1), trials=0, seed=1, delta=2.5)
    with pytest.raises(ValueError, match="dimensions"):
        VehicleModel(length=0.0)
    with pytest.raises(ValueError, match="count"):
        VehicleModel(count=-1)


# ---------------------------------------------------------------------------
# sample density


def test_sample_density_nonzero_exactly_where_useful():
    scene, targets, cands, solution = micro_setup()
    density = sample_density(solution, scene, targets, cands, delta=2.5)
    assert density.shape == (len(targets),)
    covered = np.zeros(len(targets), dtype=bool)
    covered[list(solution.covered)] = True
    assert np.all(density[covered] >= 1)


def test_proxy_note_mentions_limits():
    assert "not object-detection accuracy" in PROXY_NOTE


# ---------------------------------------------------------------------------
# rendering


def test_render_byte_identical_across_runs(tmp_path, demo_scene, demo_targets,
                                           demo_grid_t3, demo_candidates_t3):
    problem = DeploymentProblem(
        demo_grid_t3, demo_targets.weights, demo_candidates_t3.costs, Cardinality(3)
    )
    solution = solve_exact(problem)
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    render_coverage_map(demo_scene, demo_targets, demo_grid_t3, solution,
                        demo_candidates_t3, p1)
    render_coverage_map(demo_scene, demo_targets, demo_grid_t3, solution,
                        demo_candidates_t3, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_render_empty_and_full_selection(tmp_path):
    scene, targets, cands, solution = micro_setup()
    grid = build_visibility_grid(cands, targets, scene, delta=2.5)

    empty = solve_exact(
        DeploymentProblem(grid, targets.weights, np.full(2, 10.0), Cardinality(0))
    )
    p = tmp_path / "empty.svg"
    render_coverage_map(scene, targets, grid, empty, cands, p)
    text = p.read_text()
    assert text.count('fill="#d62728"') == 0  # no covered dots
    assert "<svg" in text and text.rstrip().endswith("</svg>")

    full_grid = VisibilityGrid(bits=np.ones_like(grid.bits), delta=grid.delta)
    full = solve_exact(
        DeploymentProblem(full_grid, targets.weights, np.full(2, 10.0), Cardinality(1))
    )
    p2 = tmp_path / "full.svg"
    render_coverage_map(scene, targets, full_grid, full, cands, p2)
    assert p2.read_text().count('fill="#d62728"') == len(targets)


def test_render_golden_demo(tmp_path, demo_scene, demo_targets, demo_grid_t3,
                            demo_candidates_t3):
    import pathlib

    golden = pathlib.Path(__file__).parent / "golden" / "coverage_demo.svg"
    problem = DeploymentProblem(
        demo_grid_t3, demo_targets.weights, demo_candidates_t3.costs, Cardinality(3)
    )
    solution = solve_exact(problem)
    out = tmp_path / "demo.svg"
    render_coverage_map(demo_scene, demo_targets, demo_grid_t3, solution,
                        demo_candidates_t3, out)
    assert out.read_bytes() == golden.read_bytes()
