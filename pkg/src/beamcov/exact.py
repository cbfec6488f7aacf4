"""Maximum-likelihood covariance fitting over the full PSD cone.

The negative log-likelihood of a probe batch depends on the covariance q
only through the expected powers lam_l(q); each measurement contributes
``log(lam_l) + y_l / lam_l``. The fit runs projected gradient descent with
eigenvalue clipping as the cone projection and backtracking step control.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .measurement import MeasurementSet, expected_powers
from .solver import SolveConfig, SolveTrace, backtracking_descent, default_step, initial_scale


def _check_covariance(q: np.ndarray, n: int) -> np.ndarray:
    q = linalg.check_hermitian(q, atol=1e-9)
    if q.shape[0] != n:
        raise ValueError(f"covariance size {q.shape[0]} does not match probes of length {n}")
    vals = np.linalg.eigvalsh(0.5 * (q + q.conj().T))
    if vals.min() < -1e-9 * max(1.0, float(vals.max())):
        raise ValueError(f"covariance is not PSD: min eigenvalue {vals.min():.3e}")
    return q


def neg_log_likelihood(q: np.ndarray, ms: MeasurementSet) -> float:
    """Measurement negative log-likelihood of covariance ``q``.

    Parameters
    ----------
    q : array_like
        Hermitian PSD matrix (eigenvalues above ``-1e-9`` relative).
    ms : MeasurementSet

    Returns
    -------
    float
        ``sum_l log(lam_l(q)) + y_l / lam_l(q)``, constants dropped.
    """
    q = _check_covariance(q, ms.n_antennas)
    lam = expected_powers(q, ms.directions, ms.snr)
    return float(np.log(lam).sum() + (ms.powers / lam).sum())


def objective(q: np.ndarray, ms: MeasurementSet, mu: float = 0.0) -> float:
    """Penalized fitting objective: `neg_log_likelihood` plus ``mu * trace(q)``."""
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    return neg_log_likelihood(q, ms) + mu * float(np.trace(q).real)


def objective_gradient(q: np.ndarray, ms: MeasurementSet, mu: float = 0.0) -> np.ndarray:
    """Gradient of `objective` with respect to the Hermitian matrix ``q``.

    Returns
    -------
    numpy.ndarray
        ``sum_l (1/lam_l - y_l/lam_l^2) u_l u_l* + mu I``, symmetrized.
    """
    q = _check_covariance(q, ms.n_antennas)
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    u = ms.directions
    lam = expected_powers(q, u, ms.snr)
    weights = 1.0 / lam - ms.powers / lam**2
    # sum_l w_l u_l u_l*: entry (n, m) needs u[n] * conj(u[m])
    grad = (u.T * weights) @ u.conj()
    if mu:
        grad = grad + mu * np.eye(ms.n_antennas)
    return linalg.hermitize(grad)


def projected_gradient_step(q: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
    """One descent step followed by the PSD cone projection."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    return linalg.psd_project(linalg.hermitize(q - step * grad))


def solve_exact_ml(ms: MeasurementSet, config: SolveConfig | None = None,
                   q0: np.ndarray | None = None) -> tuple[np.ndarray, SolveTrace]:
    """Fit a PSD covariance to a probe batch by penalized maximum likelihood.

    Parameters
    ----------
    ms : MeasurementSet
    config : SolveConfig, optional
        Solver hyperparameters; defaults throughout.
    q0 : array_like, optional
        Feasible (PSD) starting matrix. Default is a scaled identity whose
        expected power matches the measured average.

    Returns
    -------
    (q_hat, trace)
        The fitted Hermitian PSD matrix and the iteration `SolveTrace`.
    """
    if config is None:
        config = SolveConfig()
    u = ms.directions
    y = ms.powers
    n = ms.n_antennas
    floors = ms.noise_floors()
    mu = config.mu
    eye = np.eye(n)

    if q0 is None:
        q0 = initial_scale(ms) * eye
    else:
        q0 = linalg.psd_project(q0)

    def lambdas(q):
        v = u.conj() @ q
        return np.einsum("ij,ij->i", v, u).real + floors

    def f(q):
        lam = lambdas(q)
        val = np.log(lam).sum() + (y / lam).sum()
        if mu:
            val += mu * np.trace(q).real
        return val

    def grad(q):
        lam = lambdas(q)
        weights = 1.0 / lam - y / lam**2
        s = (u.T * weights) @ u.conj()
        if mu:
            s = s + mu * eye
        return linalg.hermitize(s)

    step0 = config.step0
    if step0 is None:
        step0 = default_step(ms, lambdas(q0))

    def inner(g, delta):
        return np.vdot(g, delta).real

    return backtracking_descent(q0, f, grad, linalg.psd_project, inner, config, step0)
