"""Roadside LiDAR placement planning: simulate sensor visibility over a
discretized road scene and pick deployments that maximize covered target
weight under a budget or unit cap."""

from .discretization import (
    Candidate,
    CandidateRecord,
    CandidateSet,
    EmptyGridError,
    TargetGrid,
    discretize_roi,
    enumerate_candidates,
    point_in_roi,
)
from .evaluation import (
    GainCurve,
    OcclusionReport,
    VehicleModel,
    WeightedComparison,
    compare_weighted,
    gain_curve,
    occlusion_monte_carlo,
    render_coverage_map,
    sample_density,
)
from .raycast import (
    PointCloud,
    PointSample,
    VisibilityGrid,
    build_visibility_grid,
    cast_ray,
    generate_beams,
    simulate_sensor,
)
from .scene import (
    MountZone,
    Obstacle,
    RoadSegment,
    Scene,
    SceneParseError,
    SceneValidationError,
    SensorSpec,
    demo_scene_path,
    load_scene,
    save_scene,
    scene_bounds,
    validate_scene,
)
from .solver import (
    Budget,
    Cardinality,
    DeploymentProblem,
    InstanceTooLargeError,
    Solution,
    VerificationReport,
    coverage_fraction,
    solve_exact,
    solve_greedy,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Candidate",
    "CandidateRecord",
    "CandidateSet",
    "Cardinality",
    "DeploymentProblem",
    "EmptyGridError",
    "GainCurve",
    "InstanceTooLargeError",
    "MountZone",
    "Obstacle",
    "OcclusionReport",
    "PointCloud",
    "PointSample",
    "RoadSegment",
    "Scene",
    "SceneParseError",
    "SceneValidationError",
    "SensorSpec",
    "Solution",
    "TargetGrid",
    "VehicleModel",
    "VerificationReport",
    "VisibilityGrid",
    "WeightedComparison",
    "build_visibility_grid",
    "cast_ray",
    "compare_weighted",
    "coverage_fraction",
    "demo_scene_path",
    "discretize_roi",
    "enumerate_candidates",
    "gain_curve",
    "generate_beams",
    "load_scene",
    "occlusion_monte_carlo",
    "point_in_roi",
    "render_coverage_map",
    "sample_density",
    "save_scene",
    "scene_bounds",
    "simulate_sensor",
    "solve_exact",
    "solve_greedy",
    "validate_scene",
    "verify_solution",
    "__version__",
]
