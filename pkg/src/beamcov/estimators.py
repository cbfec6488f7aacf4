"""Estimator classes with the scikit-learn fit/params conventions.

The design matrix ``X`` is the (L, N) complex probe matrix, one beamforming
vector per row, and ``y`` holds the measured probe powers. All estimators
expose ``beamformer_`` after fitting; the likelihood-based ones also expose
the fitted covariance and solver diagnostics.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exact import neg_log_likelihood, solve_exact_ml
from .glm import reconstruct_q, solve_approx_ml
from .linalg import max_eigenvector
from .measurement import MeasurementSet, check_measurement_data
from .solver import SolveConfig


class _CovarianceSolver(BaseEstimator):
    """Shared plumbing: hyperparameters, validation, scoring."""

    def __init__(self, snr=10.0, mu=0.0, step0=None, rho=0.5, max_iter=200,
                 tol=1e-6, step_min=1e-12):
        self.snr = snr
        self.mu = mu
        self.step0 = step0
        self.rho = rho
        self.max_iter = max_iter
        self.tol = tol
        self.step_min = step_min

    def _measurements(self, X, y) -> MeasurementSet:
        X, y = check_measurement_data(X, y)
        return MeasurementSet(X, y, snr=self.snr)

    def _config(self) -> SolveConfig:
        return SolveConfig(mu=self.mu, step0=self.step0, rho=self.rho,
                           max_iter=self.max_iter, tol=self.tol,
                           step_min=self.step_min)

    def _finalize(self, ms: MeasurementSet, covariance: np.ndarray, trace) -> None:
        self.covariance_ = covariance
        self.beamformer_, self.gain_ = max_eigenvector(covariance)
        self.history_ = trace
        self.n_iter_ = trace.iterations
        self.n_features_in_ = ms.n_antennas

    def score(self, X, y) -> float:
        """Mean per-probe log-likelihood (up to constants; higher is better)."""
        check_is_fitted(self, "covariance_")
        ms = self._measurements(X, y)
        return -neg_log_likelihood(self.covariance_, ms) / ms.n_probes


class ExactMLCovariance(_CovarianceSolver):
    """Penalized maximum-likelihood covariance fit over the full PSD cone.

    Parameters
    ----------
    snr : float
        Linear per-antenna SNR of the probe hardware.
    mu : float
        Trace-penalty weight.
    step0, rho, max_iter, tol, step_min
        Solver controls; see `beamcov.solver.SolveConfig`.

    Attributes
    ----------
    covariance_ : numpy.ndarray
        Fitted Hermitian PSD matrix.
    beamformer_ : numpy.ndarray
        Unit-norm dominant eigenvector of ``covariance_``.
    gain_ : float
        Its eigenvalue.
    history_ : beamcov.solver.SolveTrace
    n_iter_ : int
    """

    def fit(self, X, y):
        ms = self._measurements(X, y)
        q, trace = solve_exact_ml(ms, self._config())
        self._finalize(ms, q, trace)
        return self


class ApproxMLCovariance(_CovarianceSolver):
    """Covariance fit restricted to probe dyads plus a scaled identity.

    Faster than `ExactMLCovariance` (no per-iteration eigendecomposition)
    at some accuracy cost. Same parameters; additionally exposes ``coef_``,
    the nonnegative dyad coefficients with the identity weight in slot 0.
    """

    def fit(self, X, y):
        ms = self._measurements(X, y)
        coef, trace = solve_approx_ml(ms, self._config())
        self.coef_ = coef
        self._finalize(ms, reconstruct_q(coef, ms.directions), trace)
        return self


class MaxPowerBeam(BaseEstimator):
    """Baseline that beamforms along the probe with the largest power.

    Attributes
    ----------
    beamformer_ : numpy.ndarray
        The winning probe, normalized to unit norm.
    index_ : int
        Its row in ``X`` (ties go to the lowest index).
    power_ : float
        Its measured power.
    """

    def fit(self, X, y):
        X, y = check_measurement_data(X, y)
        idx = int(np.argmax(y))
        direction = X[idx]
        self.beamformer_ = direction / np.linalg.norm(direction)
        self.index_ = idx
        self.power_ = float(y[idx])
        self.n_features_in_ = X.shape[1]
        return self
