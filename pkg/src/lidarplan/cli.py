"""Command-line pipeline: scene file in, deployment plan and reports out.

Subcommands mirror the stages (grid, solve, eval, render); `pipeline` runs
them all and writes a manifest of config and artifact checksums.  Every
stage writes its outputs under `--out`, first as `<name>.partial`, renamed
only when the stage finishes, so interrupted runs leave no half-written
final artifacts.  Identical config and seed give byte-identical artifacts
regardless of `--jobs`.

Exit codes: 0 success, 1 infeasible stage or solver refusal, 2 input error,
3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .discretization import (
    Candidate,
    CandidateRecord,
    CandidateSet,
    EmptyGridError,
    TargetGrid,
    discretize_roi,
    enumerate_candidates,
    read_candidates_csv,
    read_targets_csv,
    write_candidates_csv,
    write_targets_csv,
)
from .evaluation import (
    PROXY_NOTE,
    VehicleModel,
    compare_weighted,
    gain_curve,
    occlusion_monte_carlo,
    render_coverage_map,
    sample_density,
    write_gain_curve_csv,
)
from .raycast import VisibilityGrid, build_visibility_grid
from .scene import Scene, SceneParseError, SceneValidationError, demo_scene_path, load_scene
from .solver import (
    EXACT_LIMIT_DEFAULT,
    Budget,
    Cardinality,
    DeploymentProblem,
    InstanceTooLargeError,
    Solution,
    coverage_fraction,
    solve_exact,
    solve_greedy,
    verify_solution,
)

SOLUTION_FORMAT = 1
MANIFEST_FORMAT = 1

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    scene: str | None = None  # None selects the bundled demo scene
    spacing: float = 3.0
    candidate_spacing: float = 6.0
    delta: float | None = None  # None means spacing / 2
    types: tuple[str, ...] = ()  # empty means every catalog type
    budget: float | None = None
    count: int | None = None
    weights: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    jobs: int | None = None
    out: str = "out"
    exact_limit: int = EXACT_LIMIT_DEFAULT
    methods: tuple[str, ...] = ("auto",)
    intensity_min: float | None = None
    trials: int = 16
    vehicles: int = 4
    gain_budgets: tuple[float, ...] = ()

    @property
    def scene_path(self) -> Path:
        return Path(self.scene) if self.scene else demo_scene_path()

    @property
    def resolved_delta(self) -> float:
        return self.delta if self.delta is not None else self.spacing / 2.0

    def constraint(self):
        if self.budget is not None:
            return Budget(self.budget)
        return Cardinality(self.count if self.count is not None else 3)


_CONFIG_KEYS = {
    "scene": str,
    "spacing": float,
    "candidate_spacing": float,
    "delta": float,
    "types": str,
    "budget": float,
    "count": int,
    "weights": str,
    "seed": int,
    "jobs": int,
    "out": str,
    "exact_limit": int,
    "method": str,
    "intensity_min": float,
    "trials": int,
    "vehicles": int,
    "gain_budgets": str,
}


def _parse_weights(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in text.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CliError(EXIT_INPUT, f"bad weight override {part!r}, expected segment=value")
        key, _, value = part.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise CliError(EXIT_INPUT, f"bad weight value in {part!r}") from None
    return out


def parse_config_file(path: str | Path) -> dict:
    """Flat key=value config; '#' starts a comment; keys match flag names."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(EXIT_INPUT, f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise CliError(EXIT_INPUT, f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            raise CliError(
                EXIT_INPUT, f"{path}:{lineno}: bad value for {key!r}: {value!r}"
            ) from None
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lidarplan",
        description="Plan roadside LiDAR deployments over a scene description.",
    )
    parser.add_argument("--version", action="version", version=f"lidarplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--scene", help="scene JSON path (default: bundled demo scene)")
        p.add_argument("--spacing", type=float, help="target lattice spacing, meters")
        p.add_argument(
            "--candidate-spacing", type=float, dest="candidate_spacing",
            help="mount lattice spacing, meters",
        )
        p.add_argument("--delta", type=float, help="visibility radius (default spacing/2)")
        p.add_argument("--types", help="comma-separated sensor type ids (default: all)")
        p.add_argument("--budget", type=float, help="cost limit (exclusive with --count)")
        p.add_argument("--count", type=int, help="unit limit (exclusive with --budget)")
        p.add_argument("--weights", help="segment weight overrides, e.g. central=10")
        p.add_argument("--seed", type=int, help="RNG seed for stochastic evaluation")
        p.add_argument("--jobs", type=int, help="worker threads (default: all cores)")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument(
            "--exact-limit", type=int, dest="exact_limit",
            help="max candidates for the exact solver",
        )
        p.add_argument(
            "--method", action="append", choices=["auto", "exact", "greedy"],
            help="solver method; repeatable (default: auto)",
        )
        p.add_argument(
            "--intensity-min", type=float, dest="intensity_min",
            help="minimum sample intensity to count toward visibility",
        )
        p.add_argument("--trials", type=int, help="occlusion Monte-Carlo trials")
        p.add_argument("--vehicles", type=int, help="vehicle boxes per trial")
        p.add_argument(
            "--gain-budgets", dest="gain_budgets",
            help="comma-separated budgets for the gain-curve sweep",
        )

    for name, doc in [
        ("grid", "discretize the scene and build the visibility matrix"),
        ("solve", "pick a deployment from previously built grid artifacts"),
        ("eval", "evaluate a solved deployment (occlusion proxy, gain curve)"),
        ("render", "draw the coverage map SVG from existing artifacts"),
        ("pipeline", "run grid, solve, eval, and render in sequence"),
    ]:
        add_common(sub.add_parser(name, help=doc))
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values = parse_config_file(args.config) if args.config else {}

    def pick(key: str, flag=None):
        return flag if flag is not None else file_values.get(key)

    updates: dict = {}
    simple = [
        ("scene", args.scene), ("spacing", args.spacing),
        ("candidate_spacing", args.candidate_spacing), ("delta", args.delta),
        ("budget", args.budget), ("count", args.count), ("seed", args.seed),
        ("jobs", args.jobs), ("out", args.out), ("exact_limit", args.exact_limit),
        ("intensity_min", args.intensity_min), ("trials", args.trials),
        ("vehicles", args.vehicles),
    ]
    for key, flag in simple:
        value = pick(key, flag)
        if value is not None:
            updates[key] = value
    types = pick("types", args.types)
    if types is not None:
        updates["types"] = tuple(t.strip() for t in types.split(",") if t.strip())
    weights = pick("weights", args.weights)
    if weights is not None:
        updates["weights"] = _parse_weights(weights)
    methods = args.method if args.method else (
        tuple(m.strip() for m in file_values["method"].split(","))
        if "method" in file_values else None
    )
    if methods:
        bad = [m for m in methods if m not in ("auto", "exact", "greedy")]
        if bad:
            raise CliError(EXIT_INPUT, f"unknown method {bad[0]!r}")
        updates["methods"] = tuple(methods)
    gain = pick("gain_budgets", args.gain_budgets)
    if gain is not None:
        try:
            updates["gain_budgets"] = tuple(float(b) for b in str(gain).split(",") if b.strip())
        except ValueError:
            raise CliError(EXIT_INPUT, f"bad gain budget list {gain!r}") from None

    cfg = replace(cfg, **updates)
    if cfg.budget is not None and cfg.count is not None:
        raise CliError(EXIT_INPUT, "--budget and --count are mutually exclusive")
    for name, value in [
        ("spacing", cfg.spacing), ("candidate-spacing", cfg.candidate_spacing),
        ("delta", cfg.resolved_delta),
    ]:
        if value <= 0:
            raise CliError(EXIT_INPUT, f"--{name} must be > 0")
    if cfg.trials < 1:
        raise CliError(EXIT_INPUT, "--trials must be >= 1")
    if cfg.vehicles < 0:
        raise CliError(EXIT_INPUT, "--vehicles must be >= 0")
    return cfg


# ---------------------------------------------------------------------------
# Artifact helpers


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class StageOutputs:
    """Write-to-partial, rename-on-commit artifact collector."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.pending: list[tuple[Path, Path]] = []

    def path_for(self, name: str) -> Path:
        partial = self.out_dir / f"{name}.partial"
        self.pending.append((partial, self.out_dir / name))
        return partial

    def commit(self) -> list[Path]:
        done = []
        for partial, final in self.pending:
            os.replace(partial, final)
            done.append(final)
        self.pending.clear()
        return done


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_scene_checked(cfg: RunConfig) -> Scene:
    path = cfg.scene_path
    if not path.exists():
        raise CliError(EXIT_INPUT, f"scene file not found: {path}")
    try:
        return load_scene(path)
    except (SceneParseError, SceneValidationError) as exc:
        raise CliError(EXIT_INPUT, f"invalid scene {path}: {exc}") from exc


def _select_types(scene: Scene, cfg: RunConfig):
    if not cfg.types:
        return list(scene.catalog)
    by_id = {s.type_id: s for s in scene.catalog}
    missing = [t for t in cfg.types if t not in by_id]
    if missing:
        raise CliError(EXIT_INPUT, f"unknown sensor types: {', '.join(missing)}")
    return [by_id[t] for t in cfg.types]


def _read_artifacts(out_dir: Path) -> tuple[TargetGrid, list[CandidateRecord], VisibilityGrid]:
    for name in ("targets.csv", "candidates.csv", "grid.vgrd"):
        if not (out_dir / name).exists():
            raise CliError(
                EXIT_INPUT, f"missing artifact {out_dir / name}; run the grid stage first"
            )
    try:
        targets = read_targets_csv(out_dir / "targets.csv")
        records = read_candidates_csv(out_dir / "candidates.csv")
        grid = VisibilityGrid.load(out_dir / "grid.vgrd")
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    if grid.rows != len(records) or grid.cols != len(targets):
        raise CliError(
            EXIT_INPUT,
            f"artifact shape mismatch: grid is {grid.rows}x{grid.cols} but there are "
            f"{len(records)} candidates and {len(targets)} targets",
        )
    return targets, records, grid


def _candidates_with_specs(records: list[CandidateRecord], scene: Scene) -> CandidateSet:
    by_id = {s.type_id: s for s in scene.catalog}
    out = []
    for rec in records:
        if rec.type_id not in by_id:
            raise CliError(
                EXIT_INPUT, f"candidate type {rec.type_id!r} not in the scene catalog"
            )
        out.append(
            Candidate(
                x=rec.x, y=rec.y, height=rec.height,
                sensor=by_id[rec.type_id], cost=rec.cost, zone_id="",
            )
        )
    return CandidateSet(spacing=0.0, candidates=tuple(out))


def _solution_payload(
    cfg: RunConfig, solution: Solution, records: list[CandidateRecord],
    weights: np.ndarray, weighted: bool,
) -> dict:
    constraint = cfg.constraint()
    return {
        "format": SOLUTION_FORMAT,
        "method": solution.method,
        "weighted": weighted,
        "constraint": {
            "kind": "budget" if isinstance(constraint, Budget) else "count",
            "value": constraint.limit,
        },
        "objective": solution.objective,
        "total_cost": solution.total_cost,
        "coverage_fraction": coverage_fraction(solution, weights),
        "optimality_bound": solution.optimality_bound,
        "n_targets": int(len(weights)),
        "covered": sorted(solution.covered),
        "selected": [
            {
                "idx": i,
                "x": records[i].x,
                "y": records[i].y,
                "height": records[i].height,
                "type": records[i].type_id,
                "cost": records[i].cost,
            }
            for i in solution.selected
        ],
    }


def _solution_from_payload(payload: dict) -> Solution:
    return Solution(
        selected=tuple(entry["idx"] for entry in payload["selected"]),
        covered=frozenset(payload["covered"]),
        objective=float(payload["objective"]),
        total_cost=float(payload["total_cost"]),
        method=payload["method"],
        optimality_bound=float(payload["optimality_bound"]),
    )


def _read_solution(out_dir: Path, name: str = "solution.json") -> dict:
    path = out_dir / name
    if not path.exists():
        raise CliError(EXIT_INPUT, f"missing artifact {path}; run the solve stage first")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{path}: invalid JSON: {exc}") from exc
    if payload.get("format") != SOLUTION_FORMAT:
        raise CliError(
            EXIT_INPUT,
            f"{path}: format {payload.get('format')!r} not supported "
            f"(expected {SOLUTION_FORMAT})",
        )
    return payload


# ---------------------------------------------------------------------------
# Stages


def stage_grid(cfg: RunConfig, out_dir: Path) -> list[Path]:
    scene = _load_scene_checked(cfg)
    types = _select_types(scene, cfg)
    try:
        targets = discretize_roi(scene, cfg.spacing)
        candidates = enumerate_candidates(scene, cfg.candidate_spacing, types)
    except EmptyGridError as exc:
        raise CliError(EXIT_STAGE, str(exc)) from exc
    if cfg.weights:
        unknown = set(cfg.weights) - {s.id for s in scene.road_segments}
        if unknown:
            raise CliError(
                EXIT_INPUT, f"weight overrides for unknown segments: {sorted(unknown)}"
            )
        targets = targets.reweighted(cfg.weights)
    t0 = time.perf_counter()
    grid = build_visibility_grid(
        candidates, targets, scene, cfg.resolved_delta,
        intensity_min=cfg.intensity_min,
        jobs=cfg.jobs if cfg.jobs is not None else os.cpu_count(),
    )
    print(
        f"[grid] {len(targets)} targets, {len(candidates)} candidates, "
        f"{grid.bits.sum()} visibility bits ({time.perf_counter() - t0:.1f}s)"
    )
    outputs = StageOutputs(out_dir)
    write_targets_csv(targets, outputs.path_for("targets.csv"))
    write_candidates_csv(candidates, outputs.path_for("candidates.csv"))
    grid.save(outputs.path_for("grid.vgrd"))
    return outputs.commit()


def _solve_one(problem: DeploymentProblem, method: str, exact_limit: int) -> Solution:
    if method == "exact":
        return solve_exact(problem, exact_limit)
    if method == "greedy":
        return solve_greedy(problem)
    if problem.grid.rows <= exact_limit:
        return solve_exact(problem, exact_limit)
    return solve_greedy(problem)


def stage_solve(cfg: RunConfig, out_dir: Path) -> list[Path]:
    targets, records, grid = _read_artifacts(out_dir)
    costs = np.array([r.cost for r in records])
    weights = targets.weights
    outputs = StageOutputs(out_dir)
    weighted = bool(cfg.weights)
    for method in cfg.methods:
        problem = DeploymentProblem(grid, weights, costs, cfg.constraint())
        t0 = time.perf_counter()
        try:
            solution = _solve_one(problem, method, cfg.exact_limit)
        except InstanceTooLargeError as exc:
            raise CliError(EXIT_STAGE, str(exc)) from exc
        elapsed = time.perf_counter() - t0
        report = verify_solution(problem, solution)
        if not report.ok:
            raise CliError(
                EXIT_INTERNAL,
                "solver output failed verification: " + "; ".join(report.violations),
            )
        print(
            f"[solve] {method} -> {solution.method}: objective {solution.objective:g}, "
            f"coverage {coverage_fraction(solution, weights):.4f}, "
            f"cost {solution.total_cost:g}, {len(solution.selected)} sensors "
            f"({elapsed:.2f}s)"
        )
        name = "solution.json" if method == "auto" else f"solution_{method}.json"
        _write_json(
            outputs.path_for(name),
            _solution_payload(cfg, solution, records, weights, weighted),
        )
    if weighted:
        unit = np.ones_like(weights)
        problem = DeploymentProblem(grid, unit, costs, cfg.constraint())
        solution = _solve_one(problem, "auto", cfg.exact_limit)
        report = verify_solution(problem, solution)
        if not report.ok:
            raise CliError(
                EXIT_INTERNAL,
                "solver output failed verification: " + "; ".join(report.violations),
            )
        print(
            f"[solve] uniform-weight baseline: objective {solution.objective:g}, "
            f"{len(solution.selected)} sensors"
        )
        _write_json(
            outputs.path_for("solution_uniform.json"),
            _solution_payload(cfg, solution, records, unit, False),
        )
    return outputs.commit()


def stage_eval(cfg: RunConfig, out_dir: Path) -> list[Path]:
    scene = _load_scene_checked(cfg)
    targets, records, grid = _read_artifacts(out_dir)
    payload = _read_solution(out_dir)
    solution = _solution_from_payload(payload)
    candidates = _candidates_with_specs(records, scene)
    costs = np.array([r.cost for r in records])
    vehicle = VehicleModel(count=cfg.vehicles)
    t0 = time.perf_counter()
    occlusion = occlusion_monte_carlo(
        solution, scene, targets, candidates, vehicle,
        trials=cfg.trials, seed=cfg.seed, delta=grid.delta,
        intensity_min=cfg.intensity_min,
    )
    density = sample_density(
        solution, scene, targets, candidates, grid.delta, cfg.intensity_min
    )
    covered_idx = sorted(solution.covered)
    density_covered = density[covered_idx] if covered_idx else np.zeros(0, dtype=np.int64)
    print(
        f"[eval] occlusion proxy over {cfg.trials} trials: mean "
        f"{occlusion.mean_coverage:.4f}, min {occlusion.min_coverage:.4f}, static "
        f"{occlusion.static_coverage:.4f} ({time.perf_counter() - t0:.1f}s)"
    )

    report: dict = {
        "format": 1,
        "note": PROXY_NOTE,
        "occlusion": {
            "trials": occlusion.trials,
            "seed": occlusion.seed,
            "mean_coverage": occlusion.mean_coverage,
            "min_coverage": occlusion.min_coverage,
            "static_coverage": occlusion.static_coverage,
            "per_trial": list(occlusion.per_trial),
            "vehicle": {
                "length": vehicle.length,
                "width": vehicle.width,
                "height": vehicle.height,
                "count": vehicle.count,
            },
        },
        "sample_density": {
            "mean_over_covered": float(density_covered.mean()) if len(density_covered) else 0.0,
            "min_over_covered": int(density_covered.min()) if len(density_covered) else 0,
            "max_over_covered": int(density_covered.max()) if len(density_covered) else 0,
        },
    }
    lines = [
        f"deployment evaluation ({PROXY_NOTE})",
        f"sensors: {len(solution.selected)}, static coverage "
        f"{occlusion.static_coverage:.6f}",
        f"occlusion proxy: {occlusion.trials} trials, {vehicle.count} vehicles/trial, "
        f"seed {occlusion.seed}",
        f"  mean coverage {occlusion.mean_coverage:.6f}",
        f"  min coverage  {occlusion.min_coverage:.6f}",
        f"sample density over covered targets: "
        f"mean {report['sample_density']['mean_over_covered']:.2f}, "
        f"min {report['sample_density']['min_over_covered']}, "
        f"max {report['sample_density']['max_over_covered']}",
    ]

    outputs = StageOutputs(out_dir)
    if cfg.gain_budgets:
        kind = "budget" if cfg.budget is not None else "count"
        curve = gain_curve(
            grid, targets.weights, costs, kind, cfg.gain_budgets, cfg.exact_limit
        )
        write_gain_curve_csv(curve, outputs.path_for("gain_curve.csv"))
        report["gain_curve"] = {
            "kind": curve.kind,
            "budgets": list(curve.budgets),
            "objectives": list(curve.objectives),
            "methods": list(curve.methods),
        }
        lines.append(f"gain curve over {kind} budgets {list(cfg.gain_budgets)}:")
        for b, obj, m in zip(curve.budgets, curve.objectives, curve.methods):
            lines.append(
                f"  {b:g}: " + (f"objective {obj:g} ({m})" if obj is not None else "failed")
            )

    if cfg.weights:
        comparison = compare_weighted(
            grid, targets.weights, costs, cfg.constraint(), cfg.exact_limit
        )
        report["weighted_comparison"] = {
            "vanilla_overall": comparison.vanilla_overall,
            "weighted_overall": comparison.weighted_overall,
            "vanilla_priority": comparison.vanilla_priority,
            "weighted_priority": comparison.weighted_priority,
            "n_priority_targets": comparison.n_priority,
        }
        lines.append(
            f"priority region ({comparison.n_priority} targets): coverage "
            f"{comparison.vanilla_priority:.4f} with unit weights vs "
            f"{comparison.weighted_priority:.4f} with overrides"
        )

    _write_json(outputs.path_for("report.json"), report)
    Path(outputs.path_for("report.txt")).write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )
    return outputs.commit()


def stage_render(cfg: RunConfig, out_dir: Path) -> list[Path]:
    scene = _load_scene_checked(cfg)
    targets, records, grid = _read_artifacts(out_dir)
    payload = _read_solution(out_dir)
    solution = _solution_from_payload(payload)
    candidates = _candidates_with_specs(records, scene)
    outputs = StageOutputs(out_dir)
    render_coverage_map(
        scene, targets, grid, solution, candidates.candidates,
        outputs.path_for("coverage.svg"),
    )
    print(f"[render] coverage map for {len(solution.selected)} sensors")
    return outputs.commit()


def _manifest_config(cfg: RunConfig) -> dict:
    """Semantic config only: execution details (jobs, out) are omitted so
    they cannot perturb the manifest."""
    scene_path = cfg.scene_path
    constraint = cfg.constraint()
    return {
        "scene_name": scene_path.name,
        "scene_sha256": _sha256(scene_path),
        "spacing": cfg.spacing,
        "candidate_spacing": cfg.candidate_spacing,
        "delta": cfg.resolved_delta,
        "types": list(cfg.types),
        "constraint": {
            "kind": "budget" if isinstance(constraint, Budget) else "count",
            "value": constraint.limit,
        },
        "weights": dict(sorted(cfg.weights.items())),
        "seed": cfg.seed,
        "exact_limit": cfg.exact_limit,
        "methods": list(cfg.methods),
        "intensity_min": cfg.intensity_min,
        "trials": cfg.trials,
        "vehicles": cfg.vehicles,
        "gain_budgets": list(cfg.gain_budgets),
        "version": __version__,
    }


def stage_pipeline(cfg: RunConfig, out_dir: Path) -> list[Path]:
    artifacts: list[Path] = []
    artifacts += stage_grid(cfg, out_dir)
    artifacts += stage_solve(cfg, out_dir)
    artifacts += stage_eval(cfg, out_dir)
    artifacts += stage_render(cfg, out_dir)
    config = _manifest_config(cfg)
    config_text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    manifest = {
        "format": MANIFEST_FORMAT,
        "tool": "lidarplan",
        "version": __version__,
        "config": config,
        "config_hash": hashlib.sha256(config_text.encode()).hexdigest(),
        "artifacts": {p.name: _sha256(p) for p in sorted(artifacts)},
    }
    outputs = StageOutputs(out_dir)
    _write_json(outputs.path_for("manifest.json"), manifest)
    done = outputs.commit()
    print(f"[pipeline] wrote {len(artifacts) + 1} artifacts to {out_dir}")
    return artifacts + done


_STAGES = {
    "grid": stage_grid,
    "solve": stage_solve,
    "eval": stage_eval,
    "render": stage_render,
    "pipeline": stage_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _merge_config(args)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _STAGES[args.command](cfg, out_dir)
        return EXIT_OK
    except CliError as exc:
        print(f"[{getattr(args, 'command', '?')}] error: {exc}", file=sys.stderr)
        return exc.code
    except (EmptyGridError, InstanceTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (SceneParseError, SceneValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
