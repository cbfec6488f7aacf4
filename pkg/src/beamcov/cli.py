"""Command-line front end: sweep benchmarks, one-off fits, simulation.

Exit codes: 0 on success, 2 for usage or configuration problems, 3 when a
numeric routine fails. Config files are strict JSON; unknown keys are
rejected before any computation starts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .channel import ArrayGeometry, SceneSamplerConfig, sample_scene, save_scene, scene_covariance
from .exact import solve_exact_ml
from .glm import reconstruct_q, solve_approx_ml
from .harness import (ExperimentPlan, SweepRow, aggregate_reports, read_sweep_csv, run_sweep,
                      write_sweep_csv)
from .linalg import NumericError, max_eigenvector
from .measurement import load_measurements, sample_directions, sample_powers, save_measurements
from .solver import SolveConfig


class ConfigError(ValueError):
    """A config document failed schema validation."""


def _as_object(value, what: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{what} must be a JSON object, got {type(value).__name__}")
    return value


def _check_keys(data: dict, required: set[str], optional: set[str], what: str) -> None:
    unknown = set(data) - required - optional
    if unknown:
        raise ConfigError(f"unknown keys in {what}: {sorted(unknown)}")
    missing = required - set(data)
    if missing:
        raise ConfigError(f"missing keys in {what}: {sorted(missing)}")


def _as_int(value, what: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{what} must be >= {minimum}, got {value}")
    return value


def _as_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}")
    return float(value)


def _scene_config(data, what: str = "scene") -> SceneSamplerConfig:
    data = _as_object(data, what)
    _check_keys(data, {"kind", "geometry"},
                {"azimuth_spread_deg", "elevation_spread_deg", "subpaths", "cluster_counts"},
                what)
    geom_data = _as_object(data["geometry"], f"{what}.geometry")
    _check_keys(geom_data, {"rows", "cols"}, {"spacing"}, f"{what}.geometry")
    geometry = ArrayGeometry(
        rows=_as_int(geom_data["rows"], f"{what}.geometry.rows", 1),
        cols=_as_int(geom_data["cols"], f"{what}.geometry.cols", 1),
        spacing=_as_number(geom_data.get("spacing", 0.5), f"{what}.geometry.spacing"),
    )
    kind = data["kind"]
    if kind not in ("single-path", "multi-cluster"):
        raise ConfigError(f"{what}.kind must be 'single-path' or 'multi-cluster', got {kind!r}")
    counts = data.get("cluster_counts", [1, 2, 3])
    if not isinstance(counts, list) or not counts:
        raise ConfigError(f"{what}.cluster_counts must be a nonempty list")
    try:
        return SceneSamplerConfig(
            kind=kind,
            geometry=geometry,
            azimuth_spread=np.deg2rad(
                _as_number(data.get("azimuth_spread_deg", 5.0), f"{what}.azimuth_spread_deg")),
            elevation_spread=np.deg2rad(
                _as_number(data.get("elevation_spread_deg", 5.0), f"{what}.elevation_spread_deg")),
            subpaths=_as_int(data.get("subpaths", 20), f"{what}.subpaths", 1),
            cluster_counts=tuple(
                _as_int(k, f"{what}.cluster_counts[]", 1) for k in counts),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _solver_config(data, mu: float = 0.0) -> SolveConfig:
    if data is None:
        return SolveConfig(mu=mu)
    data = _as_object(data, "solver")
    _check_keys(data, set(), {"max_iter", "tol", "rho", "step0", "step_min"}, "solver")
    try:
        return SolveConfig(
            mu=mu,
            step0=None if data.get("step0") is None else _as_number(data["step0"], "solver.step0"),
            rho=_as_number(data.get("rho", 0.5), "solver.rho"),
            max_iter=_as_int(data.get("max_iter", 200), "solver.max_iter", 1),
            tol=_as_number(data.get("tol", 1e-6), "solver.tol"),
            step_min=_as_number(data.get("step_min", 1e-12), "solver.step_min"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def load_sweep_config(path) -> tuple[ExperimentPlan, int]:
    """Parse and validate a sweep config; returns (plan, workers)."""
    data = _as_object(_load_json(path), "sweep config")
    _check_keys(data,
                {"scene", "l_values", "snr_db", "diversity", "trials", "estimators", "seed"},
                {"mu_values", "workers", "solver"}, "sweep config")
    l_values = data["l_values"]
    if not isinstance(l_values, list) or not l_values:
        raise ConfigError("l_values must be a nonempty list")
    estimators = data["estimators"]
    if not isinstance(estimators, list) or not estimators:
        raise ConfigError("estimators must be a nonempty list")
    mu_values = data.get("mu_values", [0.0])
    if not isinstance(mu_values, list) or not mu_values:
        raise ConfigError("mu_values must be a nonempty list")
    workers = _as_int(data.get("workers", 1), "workers", 1)
    try:
        plan = ExperimentPlan(
            scene=_scene_config(data["scene"]),
            l_values=[_as_int(l, "l_values[]", 1) for l in l_values],
            snr=10.0 ** (_as_number(data["snr_db"], "snr_db") / 10.0),
            diversity=_as_int(data["diversity"], "diversity", 1),
            trials=_as_int(data["trials"], "trials", 1),
            estimators=tuple(str(e) for e in estimators),
            mu_values=tuple(_as_number(m, "mu_values[]") for m in mu_values),
            seed=_as_int(data["seed"], "seed", 0),
            solver=_solver_config(data.get("solver")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return plan, workers


def load_simulate_config(path) -> dict:
    """Parse and validate a simulate config into keyword fields."""
    data = _as_object(_load_json(path), "simulate config")
    _check_keys(data, {"scene", "l", "snr_db", "diversity", "seed"}, set(), "simulate config")
    return {
        "scene": _scene_config(data["scene"]),
        "l": _as_int(data["l"], "l", 1),
        "snr": 10.0 ** (_as_number(data["snr_db"], "snr_db") / 10.0),
        "diversity": _as_int(data["diversity"], "diversity", 1),
        "seed": _as_int(data["seed"], "seed", 0),
    }


def _complex_pairs(values: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(values).ravel()]


def _matrix_pairs(m: np.ndarray) -> list:
    return [_complex_pairs(row) for row in np.asarray(m)]


def plot_sweep(rows: list[SweepRow], path) -> None:
    """Render mean loss against probe budget, one line per estimator cell."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        series.setdefault((row.estimator, row.mu), []).append(row)
    want_mu = len({key[1] for key in series}) > 1
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for (estimator, mu), cell_rows in series.items():
        cell_rows = sorted(cell_rows, key=lambda r: r.l)
        label = f"{estimator}, mu={mu:g}" if want_mu else estimator
        yerr = [0.0 if not np.isfinite(r.stderr_db) else r.stderr_db for r in cell_rows]
        ax.errorbar([r.l for r in cell_rows], [r.mean_loss_db for r in cell_rows],
                    yerr=yerr, marker="o", capsize=3, label=label)
    ax.set_xlabel("probe budget L")
    ax.set_ylabel("mean beamforming loss (dB)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_sweep(args) -> int:
    plan, workers = load_sweep_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {args.seed}")
        plan.seed = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {args.workers}")
        workers = args.workers
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_sweep(plan, workers=workers, jsonl_path=out / "trials.jsonl")
    rows = aggregate_reports(plan, reports)
    csv_path = out / "sweep.csv"
    write_sweep_csv(rows, csv_path)
    plot_sweep(read_sweep_csv(csv_path), out / "sweep.svg")
    print(f"wrote {csv_path}, {out / 'sweep.svg'}, {out / 'trials.jsonl'}")
    return 0


def cmd_estimate(args) -> int:
    ms = load_measurements(args.measurements)
    if args.mu < 0:
        raise ConfigError(f"mu must be nonnegative, got {args.mu}")
    config = SolveConfig(mu=args.mu)
    result: dict = {}
    if args.estimator == "exact":
        q, trace = solve_exact_ml(ms, config)
    else:
        coef, trace = solve_approx_ml(ms, config)
        q = reconstruct_q(coef, ms.directions)
        result["coefficients"] = {"q0": float(coef[0]), "q": [float(c) for c in coef[1:]]}
    beam, gain = max_eigenvector(q)
    result = {
        "q": _matrix_pairs(q),
        "trace": trace.to_dict(),
        "beamformer": _complex_pairs(beam),
        "gain": gain,
        "objective": trace.objective_values[-1] if trace.objective_values
        else trace.initial_objective,
        **result,
    }
    if trace.terminated_by == "step-underflow":
        result["warning"] = "step size underflowed before the tolerance was reached"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    estimate_path = out / "estimate.json"
    with open(estimate_path, "w") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    csv_path = out / "iterations.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("iter,objective,alpha,accepted\n")
        for i, (obj, alpha, acc) in enumerate(
                zip(trace.objective_values, trace.step_sizes, trace.accepted), start=1):
            fh.write(f"{i},{obj:.12g},{alpha:.12g},{int(acc)}\n")
    print(f"wrote {estimate_path}, {csv_path}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_simulate_config(args.config)
    seed = cfg["seed"] if args.seed is None else args.seed
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    scene = sample_scene(np.random.default_rng([seed, 0]), cfg["scene"])
    q_true = scene_covariance(scene)
    meas_rng = np.random.default_rng([seed, 1])
    directions = sample_directions(cfg["scene"].geometry, cfg["l"], meas_rng)
    ms = sample_powers(q_true, directions, cfg["snr"], cfg["diversity"], meas_rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_measurements(ms, out / "measurements.json")
    save_scene(scene, out / "scene.json")
    print(f"wrote {out / 'measurements.json'}, {out / 'scene.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamcov",
        description="Spatial covariance estimation from beamformed power probes.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte Carlo benchmark sweep")
    sweep.add_argument("--config", required=True, help="sweep config JSON")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--workers", type=int, default=None, help="process count override")
    sweep.add_argument("--seed", type=int, default=None, help="master seed override")
    sweep.set_defaults(func=cmd_sweep)

    estimate = sub.add_parser("estimate", help="fit a covariance to a measurement file")
    estimate.add_argument("measurements", help="measurement-set JSON file")
    estimate.add_argument("--estimator", choices=["exact", "approx"], default="exact",
                          help="solver to run")
    estimate.add_argument("--mu", type=float, default=0.0, help="trace-penalty weight")
    estimate.add_argument("--out", required=True, help="output directory")
    estimate.set_defaults(func=cmd_estimate)

    simulate = sub.add_parser("simulate", help="draw a random scene and measurements")
    simulate.add_argument("--config", required=True, help="simulate config JSON")
    simulate.add_argument("--out", required=True, help="output directory")
    simulate.add_argument("--seed", type=int, default=None, help="seed override")
    simulate.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
