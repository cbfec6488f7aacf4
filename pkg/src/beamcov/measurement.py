"""Beamformed power probes: expected powers, noisy sampling, file format.

Each probe applies a beamforming vector u to the array and records the
average received power over a few diversity branches. Under the channel
covariance q and per-antenna SNR ``snr``, the expected power of a probe is
the quadratic form u* q u plus the noise floor ||u||^2 / snr; the measured
power is that expectation times a scaled chi-square fluctuation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .channel import HALF_PI, ArrayGeometry, array_response


def check_measurement_data(directions, powers) -> tuple[np.ndarray, np.ndarray]:
    """Coerce and validate a probe matrix and its measured powers.

    Parameters
    ----------
    directions : array_like
        Complex matrix with one probe vector per row.
    powers : array_like
        Nonnegative measured power per probe.

    Returns
    -------
    (U, y)
        ``U`` as complex128 of shape (L, N) and ``y`` as float64 of shape
        (L,), validated for matching lengths, finiteness, and sign.
    """
    u = np.asarray(directions, dtype=np.complex128)
    if u.ndim != 2:
        raise ValueError(f"directions must be a 2-D array, got ndim={u.ndim}")
    if u.shape[0] < 1 or u.shape[1] < 1:
        raise ValueError(f"directions must be nonempty, got shape {u.shape}")
    if not np.all(np.isfinite(u.view(np.float64))):
        raise ValueError("directions contain non-finite entries")
    y = np.asarray(powers, dtype=np.float64)
    if y.shape != (u.shape[0],):
        raise ValueError(
            f"powers shape {y.shape} does not match {u.shape[0]} probes")
    if not np.all(np.isfinite(y)):
        raise ValueError("powers contain non-finite entries")
    if np.any(y < 0):
        raise ValueError("powers must be nonnegative")
    return u, y


@dataclass(eq=False)
class MeasurementSet:
    """A batch of power probes taken under one receiver configuration.

    Attributes
    ----------
    directions : numpy.ndarray
        (L, N) complex; row l is the beamforming vector of probe l.
    powers : numpy.ndarray
        (L,) measured average powers.
    snr : float
        Linear per-antenna SNR; sets the noise floor ``||u||^2 / snr``.
    diversity : int
        Number of independent branches averaged into each power.
    """

    directions: np.ndarray
    powers: np.ndarray
    snr: float
    diversity: int = 1

    def __post_init__(self):
        self.directions, self.powers = check_measurement_data(self.directions, self.powers)
        self.snr = float(self.snr)
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")
        self.diversity = int(self.diversity)
        if self.diversity < 1:
            raise ValueError(f"diversity must be at least 1, got {self.diversity}")

    @property
    def n_probes(self) -> int:
        return self.directions.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.directions.shape[1]

    def probe_norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.directions.conj(), self.directions).real

    def noise_floors(self) -> np.ndarray:
        """Per-probe noise power ||u||^2 / snr."""
        return self.probe_norms_sq() / self.snr


def expected_powers(q: np.ndarray, directions: np.ndarray, snr: float) -> np.ndarray:
    """Expected probe powers u* q u + ||u||^2 / snr for every row of ``directions``.

    No validation; callers in inner loops guarantee a Hermitian PSD ``q``.
    """
    v = directions.conj() @ q
    sig = np.einsum("ij,ij->i", v, directions).real
    norms = np.einsum("ij,ij->i", directions.conj(), directions).real
    return sig + norms / snr


def expected_power(q: np.ndarray, u: np.ndarray, snr: float) -> float:
    """Expected power of a single probe under covariance ``q``.

    Parameters
    ----------
    q : array_like
        Hermitian PSD covariance (small negative eigenvalues from roundoff
        are tolerated).
    u : array_like
        Probe vector of matching length.
    snr : float
        Linear per-antenna SNR, positive.

    Returns
    -------
    float
        ``u* q u + ||u||^2 / snr``; never below the noise floor for PSD q.
    """
    q = linalg.check_hermitian(q, atol=1e-9)
    u = np.asarray(u, dtype=np.complex128).ravel()
    if u.shape[0] != q.shape[0]:
        raise ValueError(f"probe length {u.shape[0]} does not match covariance size {q.shape[0]}")
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    vals = np.linalg.eigvalsh(0.5 * (q + q.conj().T))
    if vals.min() < -1e-9 * max(1.0, vals.max()):
        raise ValueError(f"covariance is not PSD: min eigenvalue {vals.min():.3e}")
    # quadratic form of a Hermitian matrix; imaginary residue is roundoff
    return float(expected_powers(q, u[None, :], snr)[0])


def sample_directions(geometry: ArrayGeometry, count: int, seed) -> np.ndarray:
    """Draw ``count`` steering-vector probes at uniform random angles.

    Azimuth and elevation are independent and uniform on [-pi/2, pi/2].

    Returns
    -------
    numpy.ndarray
        (count, geometry.size) complex matrix, one probe per row.
    """
    if count < 1:
        raise ValueError(f"need at least one probe, got {count}")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(-HALF_PI, HALF_PI, size=(count, 2))
    return np.stack([array_response(geometry, az, el) for az, el in angles])


def sample_powers(q_true, directions, snr: float, diversity: int, seed,
                  method: str = "gaussian") -> MeasurementSet:
    """Simulate noisy probe powers under a known covariance.

    Each power is distributed as ``lam * chi2(2*diversity) / (2*diversity)``
    where ``lam`` is the probe's expected power. Two equivalent simulation
    paths are provided: ``"gaussian"`` averages ``diversity`` squared
    complex-Gaussian branch gains (the generative definition), ``"chi2"``
    draws the chi-square form directly.

    Parameters
    ----------
    q_true : array_like
        Hermitian PSD ground-truth covariance.
    directions : array_like
        (L, N) probe matrix.
    snr : float
        Linear per-antenna SNR.
    diversity : int
        Branches averaged per probe.
    seed : int, sequence of int, or numpy.random.Generator
    method : {"gaussian", "chi2"}

    Returns
    -------
    MeasurementSet
    """
    directions = np.asarray(directions, dtype=np.complex128)
    q_true = linalg.hermitize(q_true)
    lam = expected_powers(q_true, directions, snr)
    if np.any(lam <= 0):
        raise ValueError("expected powers must be positive; check q_true and snr")
    rng = np.random.default_rng(seed)
    count = lam.shape[0]
    diversity = int(diversity)
    if diversity < 1:
        raise ValueError(f"diversity must be at least 1, got {diversity}")
    if method == "gaussian":
        scale = np.sqrt(0.5 * lam)[:, None, None]
        gains = rng.standard_normal((count, diversity, 2)) * scale
        y = np.square(gains).sum(axis=(1, 2)) / diversity
    elif method == "chi2":
        y = lam * rng.chisquare(2 * diversity, size=count) / (2 * diversity)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return MeasurementSet(directions, y, snr, diversity)


def measurements_to_dict(ms: MeasurementSet) -> dict:
    """JSON-ready dict with the on-disk schema (n/gamma/d/measurements)."""
    return {
        "n": ms.n_antennas,
        "gamma": ms.snr,
        "d": ms.diversity,
        "measurements": [
            {"u": [[float(c.real), float(c.imag)] for c in row], "y": float(y)}
            for row, y in zip(ms.directions, ms.powers)
        ],
    }


def measurements_from_dict(data: dict) -> MeasurementSet:
    """Parse and validate the on-disk measurement schema."""
    if not isinstance(data, dict):
        raise ValueError("measurement document must be a JSON object")
    extra = set(data) - {"n", "gamma", "d", "measurements"}
    if extra:
        raise ValueError(f"unknown keys in measurement document: {sorted(extra)}")
    try:
        n = int(data["n"])
        gamma = float(data["gamma"])
        d = int(data["d"])
        entries = data["measurements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed measurement document: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise ValueError("measurement document needs a nonempty 'measurements' list")
    rows, powers = [], []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or set(entry) != {"u", "y"}:
            raise ValueError(f"measurement {i} must have exactly the keys 'u' and 'y'")
        u = entry["u"]
        if not isinstance(u, list) or len(u) != n:
            raise ValueError(f"measurement {i}: probe length differs from n={n}")
        try:
            rows.append([complex(re, im) for re, im in u])
            powers.append(float(entry["y"]))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"measurement {i} is malformed: {exc}") from exc
    return MeasurementSet(np.asarray(rows), np.asarray(powers), gamma, d)


def save_measurements(ms: MeasurementSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(measurements_to_dict(ms), fh, indent=2)
        fh.write("\n")


def load_measurements(path) -> MeasurementSet:
    with open(path) as fh:
        return measurements_from_dict(json.load(fh))
