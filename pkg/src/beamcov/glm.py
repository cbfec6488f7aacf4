"""Approximate ML fitting over nonnegative probe-dyad coefficients.

Restricting the covariance to the cone spanned by the probe outer products
and the identity, ``q = sum_l w_l u_l u_l* + w_0 I`` with w >= 0, turns the
fit into a generalized linear model: a fixed coupling matrix maps the
coefficients to per-probe signal powers (slot 0 carries the trace), and the
objective separates across slots. The solver never needs an
eigendecomposition; only the final reconstruction does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .measurement import MeasurementSet
from .solver import SolveConfig, SolveTrace, backtracking_descent, default_step, initial_scale


def coupling_matrix(directions: np.ndarray) -> np.ndarray:
    """Map dyad coefficients to per-probe signal powers and the trace.

    For probes u_1..u_L of length n, returns the (L+1) x (L+1) symmetric
    matrix with entry (l, j) = |u_l* u_j|^2 for l, j >= 1, edge entries
    (0, j) = (j, 0) = ||u_j||^2, and corner (0, 0) = n. Row 0 of the
    product with a coefficient vector is the trace of the reconstructed
    covariance; row l is its signal power in probe l.
    """
    u = np.asarray(directions, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] < 1:
        raise ValueError(f"directions must be a nonempty 2-D array, got shape {u.shape}")
    norms_sq = np.einsum("ij,ij->i", u.conj(), u).real
    a = np.empty((u.shape[0] + 1, u.shape[0] + 1))
    a[0, 0] = u.shape[1]
    a[0, 1:] = norms_sq
    a[1:, 0] = norms_sq
    cross = np.abs(u.conj() @ u.T) ** 2
    a[1:, 1:] = 0.5 * (cross + cross.T)
    return a


@dataclass(eq=False)
class GlmProblem:
    """Precomputed pieces of the coefficient-space fitting problem."""

    coupling: np.ndarray
    noise_floors: np.ndarray
    powers: np.ndarray
    mu: float = 0.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")

    @classmethod
    def from_measurements(cls, ms: MeasurementSet, mu: float = 0.0) -> "GlmProblem":
        return cls(coupling_matrix(ms.directions), ms.noise_floors(), ms.powers, mu)


def _check_coefficients(coef: np.ndarray, problem: GlmProblem) -> np.ndarray:
    coef = np.asarray(coef, dtype=np.float64)
    if coef.shape != (problem.coupling.shape[0],):
        raise ValueError(
            f"coefficient vector has shape {coef.shape}, expected ({problem.coupling.shape[0]},)")
    if np.any(coef < 0):
        raise ValueError(f"coefficients must be nonnegative, got min {coef.min()!r}")
    return coef


def glm_objective(coef: np.ndarray, problem: GlmProblem) -> float:
    """Separable objective at a nonnegative coefficient vector.

    Slot 0 contributes ``mu * trace``; slot l contributes
    ``log(z_l + c_l) + y_l / (z_l + c_l)`` with z the coupled signal powers
    and c the per-probe noise floors. Equals the penalized matrix
    objective of the reconstructed covariance.
    """
    coef = _check_coefficients(coef, problem)
    z = problem.coupling @ coef
    lam = z[1:] + problem.noise_floors
    return float(problem.mu * z[0] + np.log(lam).sum() + (problem.powers / lam).sum())


def glm_gradient(coef: np.ndarray, problem: GlmProblem) -> np.ndarray:
    """Gradient of `glm_objective` in coefficient space."""
    coef = _check_coefficients(coef, problem)
    z = problem.coupling @ coef
    lam = z[1:] + problem.noise_floors
    slotwise = np.empty_like(z)
    slotwise[0] = problem.mu
    slotwise[1:] = 1.0 / lam - problem.powers / lam**2
    return problem.coupling.T @ slotwise


def reconstruct_q(coef: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Rebuild the covariance ``sum_l coef[l] u_l u_l* + coef[0] I``.

    The trace of the result equals slot 0 of the coupled vector, and its
    expected probe powers match the coefficient-space model exactly.
    """
    u = np.asarray(directions, dtype=np.complex128)
    coef = np.asarray(coef, dtype=np.float64)
    if coef.ndim != 1 or coef.shape[0] != u.shape[0] + 1:
        raise ValueError(
            f"expected {u.shape[0] + 1} coefficients for {u.shape[0]} probes, got {coef.shape}")
    q = (u.T * coef[1:]) @ u.conj() + coef[0] * np.eye(u.shape[1])
    return linalg.hermitize(q)


def solve_approx_ml(ms: MeasurementSet, config: SolveConfig | None = None
                    ) -> tuple[np.ndarray, SolveTrace]:
    """Fit nonnegative dyad coefficients by projected gradient descent.

    The coupling matrix is built once; each iteration is a pair of
    matrix-vector products and a clip at zero, so the solve stays
    eigendecomposition-free.

    Parameters
    ----------
    ms : MeasurementSet
    config : SolveConfig, optional

    Returns
    -------
    (coef, trace)
        Coefficient vector of length ``ms.n_probes + 1`` (slot 0 is the
        identity weight) and the iteration `SolveTrace`. Use
        `reconstruct_q` for the matrix form.
    """
    if config is None:
        config = SolveConfig()
    problem = GlmProblem.from_measurements(ms, mu=config.mu)
    a = problem.coupling
    floors = problem.noise_floors
    y = problem.powers
    mu = problem.mu

    coef0 = np.zeros(a.shape[0])
    coef0[0] = initial_scale(ms)

    def f(coef):
        z = a @ coef
        lam = z[1:] + floors
        return mu * z[0] + np.log(lam).sum() + (y / lam).sum()

    def grad(coef):
        z = a @ coef
        lam = z[1:] + floors
        slotwise = np.empty_like(z)
        slotwise[0] = mu
        slotwise[1:] = 1.0 / lam - y / lam**2
        return a.T @ slotwise

    def project(coef):
        return np.maximum(coef, 0.0)

    step0 = config.step0
    if step0 is None:
        # the scaled-identity start has the same expected powers as in the
        # matrix-space solver, so the same heuristic applies
        step0 = default_step(ms, coef0[0] * ms.probe_norms_sq() + floors)

    return backtracking_descent(coef0, f, grad, project, np.dot, config, step0)
