"""Hermitian eigendecompositions and the positive-semidefinite cone projection.

Everything downstream funnels its eigenvalue work through this module:
covariance factorizations, the solver's cone projection, and the dominant
beamforming direction all share one symmetrize-then-factor path.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class NumericError(RuntimeError):
    """Raised when an eigensolver fails to converge on a finite matrix."""


class EigenDecomposition(NamedTuple):
    """Eigenvalues in descending order and the matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray


def hermitize(m: np.ndarray) -> np.ndarray:
    """Return (m + m*)/2, the exact Hermitian part of ``m``.

    The average is exactly conjugate-symmetric in floating point, so this is
    the canonical way to absorb roundoff after additions and scalings that
    should have preserved Hermitian structure.
    """
    m = np.asarray(m, dtype=np.complex128)
    return 0.5 * (m + m.conj().T)


def check_hermitian(m: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Validate that ``m`` is square and conjugate-symmetric within ``atol``.

    Parameters
    ----------
    m : array_like
        Candidate matrix.
    atol : float
        Entrywise absolute tolerance on ``m - m*``.

    Returns
    -------
    numpy.ndarray
        ``m`` as a complex128 array (not symmetrized; see `hermitize`).

    Raises
    ------
    ValueError
        If ``m`` is not square, contains non-finite entries, or deviates from
        conjugate symmetry by more than ``atol``.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("matrix has non-finite entries")
    dev = np.abs(m - m.conj().T).max() if m.size else 0.0
    if dev > atol:
        raise ValueError(
            f"matrix is not Hermitian: max |m - m*| = {dev:.3e} exceeds {atol:.1e}"
        )
    return m


def hermitian_eig(m: np.ndarray) -> EigenDecomposition:
    """Full eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like
        Square conjugate-symmetric matrix. Symmetrized internally before
        factorization, so entry-level roundoff is tolerated.

    Returns
    -------
    EigenDecomposition
        Real eigenvalues sorted descending, eigenvectors in matching columns,
        satisfying ``m ~= vectors @ diag(values) @ vectors*``.

    Raises
    ------
    NumericError
        If the underlying factorization does not converge.
    """
    m = np.asarray(m, dtype=np.complex128)
    scale = float(np.abs(m).max()) if m.size else 0.0
    m = hermitize(check_hermitian(m, atol=1e-9 * max(1.0, scale)))
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    # eigh returns ascending order
    return EigenDecomposition(vals[::-1].copy(), vecs[:, ::-1].copy())


def psd_project(m: np.ndarray) -> np.ndarray:
    """Project a Hermitian matrix onto the positive-semidefinite cone.

    Negative eigenvalues are clipped to zero and the matrix is rebuilt; in
    Frobenius norm this is the nearest PSD matrix.

    Parameters
    ----------
    m : array_like
        Square conjugate-symmetric matrix.

    Returns
    -------
    numpy.ndarray
        Hermitian PSD matrix of the same shape.
    """
    vals, vecs = hermitian_eig(m)
    clipped = np.maximum(vals, 0.0)
    return hermitize((vecs * clipped) @ vecs.conj().T)


def max_eigenvector(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Dominant eigenpair of a Hermitian matrix.

    Returns
    -------
    (vector, value)
        Unit-norm eigenvector for the largest eigenvalue, and that eigenvalue.
        The vector's global phase is whatever the factorization produced.
    """
    vals, vecs = hermitian_eig(m)
    return vecs[:, 0].copy(), float(vals[0])
