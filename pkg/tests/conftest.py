"""Shared random-instance factories for the test suite."""

import numpy as np

from beamcov.linalg import hermitize
from beamcov.measurement import sample_powers


def random_hermitian(rng, n):
    """Dense Hermitian matrix with unit-order entries."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return hermitize(a)


def random_psd(rng, n, rank=None):
    """Random PSD matrix; ``rank`` caps its rank."""
    rank = n if rank is None else rank
    b = (rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))) / np.sqrt(2)
    return b @ b.conj().T


def random_probes(rng, l, n):
    """Dense complex-Gaussian probe matrix, one probe per row."""
    return (rng.standard_normal((l, n)) + 1j * rng.standard_normal((l, n))) / np.sqrt(2)


def random_measurements(rng, n=4, l=12, snr=10.0, diversity=4, rank=None):
    """Synthetic probe batch from a random trace-normalized PSD truth.

    Returns (q_true, measurement set).
    """
    q = random_psd(rng, n, rank)
    q *= n / np.trace(q).real
    u = random_probes(rng, l, n)
    return q, sample_powers(q, u, snr, diversity, rng)


def hvec(m):
    """Isometric real coordinates of a Hermitian matrix.

    The real inner product Re tr(a* b) equals the dot product of the
    coordinate vectors, so matrix gradients can be compared componentwise.
    """
    iu = np.triu_indices(m.shape[0], 1)
    return np.concatenate([np.diag(m).real, np.sqrt(2.0) * m[iu].real,
                           np.sqrt(2.0) * m[iu].imag])


def hermitian_basis(n):
    """Orthonormal Hermitian basis matching the `hvec` coordinate order."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for part in ("real", "imag"):
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n), dtype=complex)
                if part == "real":
                    e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
                else:
                    e[i, j] = 1j / np.sqrt(2.0)
                    e[j, i] = -1j / np.sqrt(2.0)
                basis.append(e)
    return basis


def accepted_strictly_decreasing(trace):
    """Check a solve trace: accepted steps strictly decrease the objective,
    rejected ones leave it unchanged. Returns the number of violations."""
    violations = 0
    prev = trace.initial_objective
    for value, accepted in zip(trace.objective_values, trace.accepted):
        if accepted:
            if not value < prev:
                violations += 1
            prev = value
        elif value != prev:
            violations += 1
    return violations
