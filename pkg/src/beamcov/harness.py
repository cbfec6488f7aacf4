"""Monte Carlo benchmark: sample scenes, fit, score the beamforming loss.

A sweep runs ``trials`` independent scenes for every probe-budget value and
estimator, then aggregates per-cell mean losses. Randomness is split into
per-trial substreams keyed by (master seed, trial index), so results do not
depend on worker count or completion order and the emitted CSV is
byte-reproducible.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .channel import SceneSamplerConfig, sample_scene, scene_covariance
from .exact import solve_exact_ml
from .glm import reconstruct_q, solve_approx_ml
from .linalg import NumericError, hermitian_eig, max_eigenvector
from .measurement import MeasurementSet, sample_directions, sample_powers
from .solver import SolveConfig

ESTIMATOR_IDS = ("exact-ml", "approx-ml", "max-power")

# beams with essentially no gain along the true channel score +inf and are
# excluded from means rather than dominating them
ORTHOGONAL_GAIN_CUTOFF = 1e-15


def beamforming_loss(q_true: np.ndarray, beamformer: np.ndarray) -> float:
    """Loss in dB of a beamformer against the best possible on ``q_true``.

    Parameters
    ----------
    q_true : array_like
        Hermitian PSD ground-truth covariance.
    beamformer : array_like
        Beamforming vector; normalized internally, so only its direction
        matters.

    Returns
    -------
    float
        ``10*log10(lam_max / (w* q_true w))``, nonnegative up to roundoff;
        ``inf`` when the beam is numerically orthogonal to the channel.
    """
    w = np.asarray(beamformer, dtype=np.complex128).ravel()
    norm = np.linalg.norm(w)
    if not norm > 0:
        raise ValueError("beamformer must be nonzero")
    w = w / norm
    top = hermitian_eig(q_true).values[0]
    gain = float(np.real(w.conj() @ q_true @ w))
    if gain <= ORTHOGONAL_GAIN_CUTOFF * top:
        return math.inf
    return 10.0 * math.log10(top / gain)


def max_power_beam(ms: MeasurementSet) -> np.ndarray:
    """Unit-norm copy of the probe with the largest measured power.

    Ties resolve to the lowest probe index.
    """
    idx = int(np.argmax(ms.powers))
    direction = ms.directions[idx]
    return direction / np.linalg.norm(direction)


@dataclass
class ExperimentPlan:
    """Everything that defines a sweep except how many workers run it."""

    scene: SceneSamplerConfig
    l_values: list[int]
    snr: float
    diversity: int
    trials: int
    estimators: tuple[str, ...] = ESTIMATOR_IDS
    mu_values: tuple[float, ...] = (0.0,)
    seed: int = 0
    solver: SolveConfig = field(default_factory=SolveConfig)

    def __post_init__(self):
        if not self.l_values or len(set(self.l_values)) != len(self.l_values):
            raise ValueError(f"l_values must be nonempty and distinct, got {self.l_values}")
        if any(l < 1 for l in self.l_values):
            raise ValueError(f"probe counts must be positive, got {self.l_values}")
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")
        if self.diversity < 1:
            raise ValueError(f"diversity must be at least 1, got {self.diversity}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        unknown = set(self.estimators) - set(ESTIMATOR_IDS)
        if not self.estimators or unknown:
            raise ValueError(
                f"estimators must be a nonempty subset of {ESTIMATOR_IDS}, got {self.estimators}")
        if not self.mu_values or any(m < 0 for m in self.mu_values):
            raise ValueError(f"mu_values must be nonempty and nonnegative, got {self.mu_values}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")

    def estimator_cells(self):
        """(estimator, mu) grid in deterministic order; the baseline ignores mu."""
        for estimator in self.estimators:
            mus = self.mu_values if estimator != "max-power" else (0.0,)
            for mu in mus:
                yield estimator, mu


@dataclass
class TrialReport:
    """Outcome of one estimator on one synthetic trial."""

    trial: int
    l: int
    estimator: str
    mu: float
    loss_db: float
    iterations: int
    seconds: float
    failed: bool = False


def _trial_data(plan: ExperimentPlan, trial_index: int, l: int):
    """Scene, ground-truth covariance, and measurements for one trial.

    Substreams are keyed so that the scene depends only on the trial index
    (identical across probe budgets, pairing the comparisons) while the
    probe draw also consumes deterministically per l.
    """
    scene = sample_scene(np.random.default_rng([plan.seed, trial_index, 0]), plan.scene)
    q_true = scene_covariance(scene)
    meas_rng = np.random.default_rng([plan.seed, trial_index, 1])
    directions = sample_directions(plan.scene.geometry, l, meas_rng)
    ms = sample_powers(q_true, directions, plan.snr, plan.diversity, meas_rng)
    return q_true, ms


def _evaluate(q_true, ms, estimator: str, mu: float, solver: SolveConfig):
    start = time.perf_counter()
    try:
        if estimator == "exact-ml":
            q, trace = solve_exact_ml(ms, replace(solver, mu=mu))
            beam, _ = max_eigenvector(q)
            iterations = trace.iterations
        elif estimator == "approx-ml":
            coef, trace = solve_approx_ml(ms, replace(solver, mu=mu))
            beam, _ = max_eigenvector(reconstruct_q(coef, ms.directions))
            iterations = trace.iterations
        elif estimator == "max-power":
            beam = max_power_beam(ms)
            iterations = 0
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        loss = beamforming_loss(q_true, beam)
        failed = False
    except (NumericError, np.linalg.LinAlgError, FloatingPointError):
        loss, iterations, failed = math.inf, 0, True
    return loss, iterations, time.perf_counter() - start, failed


def run_trial(plan: ExperimentPlan, trial_index: int, l: int, estimator: str,
              mu: float = 0.0) -> TrialReport:
    """Run a single (trial, probe budget, estimator) cell.

    Deterministic given (plan.seed, trial_index, l, estimator, mu); all
    estimators see identical measurements for the same trial and l.
    """
    if estimator not in ESTIMATOR_IDS:
        raise ValueError(f"unknown estimator {estimator!r}")
    q_true, ms = _trial_data(plan, trial_index, l)
    loss, iterations, seconds, failed = _evaluate(q_true, ms, estimator, mu, plan.solver)
    return TrialReport(trial_index, l, estimator, mu, loss, iterations, seconds, failed)


def _run_block(plan: ExperimentPlan, trial_index: int, l: int) -> list[TrialReport]:
    # one synthesis of the trial data shared by every estimator cell
    q_true, ms = _trial_data(plan, trial_index, l)
    reports = []
    for estimator, mu in plan.estimator_cells():
        loss, iterations, seconds, failed = _evaluate(q_true, ms, estimator, mu, plan.solver)
        reports.append(TrialReport(trial_index, l, estimator, mu, loss, iterations,
                                   seconds, failed))
    return reports


def run_sweep(plan: ExperimentPlan, workers: int = 1,
              jsonl_path=None) -> list[TrialReport]:
    """Run the full sweep and return every trial report.

    Parameters
    ----------
    plan : ExperimentPlan
    workers : int
        Process count for trial-level parallelism; results are identical
        for any value.
    jsonl_path : path-like, optional
        If given, per-trial reports are also dumped as JSON lines (wall
        times included, so this file is not byte-reproducible).
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    cells = [(trial, l) for l in plan.l_values for trial in range(plan.trials)]
    if workers == 1:
        blocks = [_run_block(plan, trial, l) for trial, l in cells]
    else:
        blocks = Parallel(n_jobs=workers)(
            delayed(_run_block)(plan, trial, l) for trial, l in cells)
    reports = [report for block in blocks for report in block]
    if jsonl_path is not None:
        with open(jsonl_path, "w") as fh:
            for r in reports:
                fh.write(json.dumps({
                    "trial": r.trial, "l": r.l, "estimator": r.estimator, "mu": r.mu,
                    "loss_db": r.loss_db if math.isfinite(r.loss_db) else None,
                    "iterations": r.iterations, "seconds": r.seconds,
                    "failed": r.failed,
                }) + "\n")
    return reports


@dataclass
class SweepRow:
    """One aggregated CSV row: an (l, estimator, mu) cell of the sweep."""

    l: int
    estimator: str
    mu: float
    mean_loss_db: float
    stderr_db: float
    trials: int
    mean_iters: float
    n_excluded: int


def aggregate_reports(plan: ExperimentPlan, reports: list[TrialReport]) -> list[SweepRow]:
    """Collapse trial reports into per-cell rows, in deterministic order.

    Infinite losses and failed fits are excluded from the mean and standard
    error and surface in ``n_excluded``.
    """
    by_cell: dict[tuple, list[TrialReport]] = {}
    for r in reports:
        by_cell.setdefault((r.l, r.estimator, r.mu), []).append(r)
    rows = []
    for l in plan.l_values:
        for estimator, mu in plan.estimator_cells():
            group = by_cell.get((l, estimator, mu), [])
            if not group:
                continue
            group.sort(key=lambda r: r.trial)
            losses = np.array([r.loss_db for r in group
                               if not r.failed and math.isfinite(r.loss_db)])
            iters = [r.iterations for r in group if not r.failed]
            mean = float(losses.mean()) if losses.size else math.nan
            stderr = float(losses.std(ddof=1) / math.sqrt(losses.size)) \
                if losses.size > 1 else math.nan
            rows.append(SweepRow(
                l=l, estimator=estimator, mu=mu, mean_loss_db=mean, stderr_db=stderr,
                trials=len(group), mean_iters=float(np.mean(iters)) if iters else math.nan,
                n_excluded=len(group) - losses.size))
    return rows


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    """Write aggregated rows; same rows give byte-identical files."""
    with open(path, "w", newline="") as fh:
        fh.write("l,estimator,mu,mean_loss_db,stderr_db,trials,mean_iters,n_excluded\n")
        for r in rows:
            fh.write(f"{r.l},{r.estimator},{_fmt(r.mu)},{_fmt(r.mean_loss_db)},"
                     f"{_fmt(r.stderr_db)},{r.trials},{_fmt(r.mean_iters)},{r.n_excluded}\n")


def read_sweep_csv(path) -> list[SweepRow]:
    """Parse a file written by `write_sweep_csv`."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        expected = ["l", "estimator", "mu", "mean_loss_db", "stderr_db", "trials",
                    "mean_iters", "n_excluded"]
        if header != expected:
            raise ValueError(f"unexpected sweep CSV header {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(expected):
                raise ValueError(f"malformed sweep CSV line: {line!r}")
            rows.append(SweepRow(
                l=int(parts[0]), estimator=parts[1], mu=float(parts[2]),
                mean_loss_db=float(parts[3]), stderr_db=float(parts[4]),
                trials=int(parts[5]), mean_iters=float(parts[6]),
                n_excluded=int(parts[7])))
    return rows
