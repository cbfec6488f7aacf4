"""Backtracking projected-gradient loop shared by both covariance solvers.

The two fitting problems differ only in their variable space (a Hermitian
matrix projected onto the PSD cone, or a nonnegative coefficient vector),
so the step/accept/terminate mechanics live here once. A candidate step is
accepted when it decreases the objective by at least a fraction ``rho`` of
the first-order model decrease; accepted steps double the step size,
rejected ones halve it and leave the iterate in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TERMINATED_MAX_ITERS = "max-iters"
TERMINATED_TOLERANCE = "tolerance"
TERMINATED_STEP_UNDERFLOW = "step-underflow"


@dataclass
class SolveConfig:
    """Hyperparameters of the projected-gradient solvers.

    Attributes
    ----------
    mu : float
        Nonnegative trace-penalty weight added to the likelihood objective.
    step0 : float or None
        Initial step size; None picks a curvature-based heuristic from the
        measurement set.
    rho : float
        Sufficient-decrease fraction in (0, 1) for the acceptance rule.
    max_iter : int
        Iteration cap; rejected steps count as iterations.
    tol : float
        Terminate once an accepted step changes the objective by less than
        ``tol * (1 + |objective|)``.
    step_min : float
        Terminate once backtracking pushes the step size below this.
    """

    mu: float = 0.0
    step0: float | None = None
    rho: float = 0.5
    max_iter: int = 200
    tol: float = 1e-6
    step_min: float = 1e-12

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if self.step0 is not None and not self.step0 > 0:
            raise ValueError(f"step0 must be positive, got {self.step0}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.tol < 0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")
        if not self.step_min > 0:
            raise ValueError(f"step_min must be positive, got {self.step_min}")


@dataclass
class SolveTrace:
    """Per-iteration record of one solver run.

    ``objective_values[k]`` is the objective of the iterate after iteration
    k (unchanged on rejected iterations), ``step_sizes[k]`` the step that
    was attempted, ``accepted[k]`` whether it was taken.
    """

    objective_values: list[float] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)
    iterations: int = 0
    terminated_by: str = TERMINATED_MAX_ITERS
    initial_objective: float = np.nan

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
            "initial_objective": self.initial_objective,
            "objective_values": self.objective_values,
            "step_sizes": self.step_sizes,
            "accepted": self.accepted,
        }


def initial_scale(ms) -> float:
    """Diagonal loading for the starting iterate.

    Matches the average measured power to the expected power of a scaled
    identity covariance, with the noise floor removed and a small positive
    floor so the start is strictly inside the feasible cone.
    """
    n = ms.n_antennas
    return max(float(ms.powers.mean()) - n / ms.snr, 0.01) / n


def default_step(ms, lam0: np.ndarray) -> float:
    """Curvature-scale heuristic for the first step size.

    ``lam0`` holds the expected probe powers at the starting iterate; the
    returned step is the inverse of a crude Lipschitz estimate
    ``L * mean(||u||^4) / mean(lam0^2)`` of the objective's curvature.
    """
    norms_sq = ms.probe_norms_sq()
    return float(np.mean(lam0**2) / (ms.n_probes * np.mean(norms_sq**2)))


def backtracking_descent(x0, objective, gradient, project, inner, config: SolveConfig,
                         step0: float):
    """Run the accept/reject projected-gradient loop from ``x0``.

    Parameters
    ----------
    x0 : ndarray
        Feasible starting iterate (not projected here).
    objective, gradient : callable
        Evaluate the objective and its gradient at an iterate.
    project : callable
        Projection onto the feasible set.
    inner : callable
        Real inner product between a gradient and a step difference.
    config : SolveConfig
    step0 : float
        Step size for the first attempt.

    Returns
    -------
    (x, trace)
        Final iterate and its `SolveTrace`.
    """
    x = x0
    f = float(objective(x))
    step = float(step0)
    grad = None
    trace = SolveTrace(initial_objective=f)
    for it in range(1, config.max_iter + 1):
        trace.iterations = it
        if grad is None:
            grad = gradient(x)
        candidate = project(x - step * grad)
        f_candidate = float(objective(candidate))
        # first-order model decrease; <= 0 whenever the candidate moved
        slope = float(inner(grad, candidate - x))
        trace.step_sizes.append(step)
        if f_candidate < f + config.rho * slope:
            change = abs(f - f_candidate) / (1.0 + abs(f))
            x, f, grad = candidate, f_candidate, None
            step *= 2.0
            trace.accepted.append(True)
            trace.objective_values.append(f)
            if change < config.tol:
                trace.terminated_by = TERMINATED_TOLERANCE
                break
        else:
            step *= 0.5
            trace.accepted.append(False)
            trace.objective_values.append(f)
            if step < config.step_min:
                trace.terminated_by = TERMINATED_STEP_UNDERFLOW
                break
    return x, trace
