"""Planar-array geometry, steering vectors, and random propagation scenes.

A scene is the ground truth of one benchmark trial: either a single plane
wave or a handful of angular clusters. Its second-order statistics are
summarized by a spatial covariance matrix, trace-normalized to the number
of antennas so that per-antenna signal power is one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitize

HALF_PI = 0.5 * np.pi
DEFAULT_SPREAD = np.deg2rad(5.0)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array on a rectangular grid.

    Parameters
    ----------
    rows, cols : int
        Grid extent; the array has ``rows * cols`` elements, flattened
        row-major everywhere in this package.
    spacing : float
        Element pitch in wavelengths along both axes.
    """

    rows: int
    cols: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array grid must be at least 1x1, got {self.rows}x{self.cols}")
        if not self.spacing > 0:
            raise ValueError(f"element spacing must be positive, got {self.spacing}")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass
class PathCluster:
    """One angular cluster: a center direction, spreads, and a power share."""

    azimuth: float
    elevation: float
    azimuth_spread: float = DEFAULT_SPREAD
    elevation_spread: float = DEFAULT_SPREAD
    power_fraction: float = 1.0
    subpaths: int = 20


@dataclass
class SinglePathScene:
    """A single plane wave arriving from (azimuth, elevation)."""

    geometry: ArrayGeometry
    azimuth: float
    elevation: float
    seed: int = 0


@dataclass
class MultiClusterScene:
    """A superposition of angular clusters; ``seed`` fixes the subpath draw."""

    geometry: ArrayGeometry
    clusters: list[PathCluster] = field(default_factory=list)
    seed: int = 0


ChannelScene = SinglePathScene | MultiClusterScene


def array_response(geometry: ArrayGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Steering vector of the planar array toward one direction.

    Element (m, n) of the grid contributes phase
    ``2*pi*spacing*(m*sin(azimuth)*cos(elevation) + n*sin(elevation))``;
    the grid is flattened row-major, so entry ``m*cols + n`` of the result
    belongs to grid position (m, n). All entries have unit modulus.

    Parameters
    ----------
    geometry : ArrayGeometry
    azimuth, elevation : float
        Arrival angles in radians, each meaningful on [-pi/2, pi/2].

    Returns
    -------
    numpy.ndarray
        Complex vector of length ``geometry.size`` with squared norm equal
        to the number of elements.
    """
    m = np.arange(geometry.rows)[:, None]
    n = np.arange(geometry.cols)[None, :]
    phase = 2.0 * np.pi * geometry.spacing * (
        m * np.sin(azimuth) * np.cos(elevation) + n * np.sin(elevation)
    )
    return np.exp(1j * phase).ravel()


def _cluster_angles(cluster: PathCluster, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Laplacian subpath angles around the cluster center, kept inside [-pi/2, pi/2]."""
    az = rng.laplace(cluster.azimuth, cluster.azimuth_spread, size=cluster.subpaths)
    el = rng.laplace(cluster.elevation, cluster.elevation_spread, size=cluster.subpaths)
    for angles, center, scale in ((az, cluster.azimuth, cluster.azimuth_spread),
                                  (el, cluster.elevation, cluster.elevation_spread)):
        for _ in range(100):
            bad = np.abs(angles) > HALF_PI
            if not bad.any():
                break
            angles[bad] = rng.laplace(center, scale, size=int(bad.sum()))
        np.clip(angles, -HALF_PI, HALF_PI, out=angles)
    return az, el


def validate_scene(scene: ChannelScene) -> None:
    """Check scene invariants; raises ValueError on an ill-formed scene."""
    if isinstance(scene, SinglePathScene):
        angles = [(scene.azimuth, scene.elevation)]
    elif isinstance(scene, MultiClusterScene):
        if not scene.clusters:
            raise ValueError("multi-cluster scene has no clusters")
        total = sum(c.power_fraction for c in scene.clusters)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"cluster power fractions sum to {total!r}, expected 1")
        for c in scene.clusters:
            if c.power_fraction < 0:
                raise ValueError(f"negative power fraction {c.power_fraction!r}")
            if c.subpaths < 1:
                raise ValueError(f"cluster needs at least one subpath, got {c.subpaths}")
            if c.azimuth_spread < 0 or c.elevation_spread < 0:
                raise ValueError("cluster spreads must be nonnegative")
        angles = [(c.azimuth, c.elevation) for c in scene.clusters]
    else:
        raise ValueError(f"unknown scene type {type(scene).__name__}")
    for az, el in angles:
        if abs(az) > HALF_PI + 1e-12 or abs(el) > HALF_PI + 1e-12:
            raise ValueError(f"center ({az}, {el}) outside [-pi/2, pi/2]")


def scene_covariance(scene: ChannelScene) -> np.ndarray:
    """Spatial covariance of a scene, trace-normalized to the array size.

    A single-path scene yields the rank-one outer product of its steering
    vector. A multi-cluster scene draws ``subpaths`` Laplacian-offset rays
    per cluster (deterministically from ``scene.seed``), weights each
    cluster by its power fraction split evenly across subpaths, and sums
    the outer products.

    Returns
    -------
    numpy.ndarray
        Hermitian PSD matrix with trace equal to ``geometry.size``.
    """
    validate_scene(scene)
    geom = scene.geometry
    if isinstance(scene, SinglePathScene):
        v = array_response(geom, scene.azimuth, scene.elevation)
        q = np.outer(v, v.conj())
    else:
        rng = np.random.default_rng(scene.seed)
        q = np.zeros((geom.size, geom.size), dtype=np.complex128)
        for cluster in scene.clusters:
            az, el = _cluster_angles(cluster, rng)
            weight = cluster.power_fraction / cluster.subpaths
            for a, e in zip(az, el):
                v = array_response(geom, a, e)
                q += weight * np.outer(v, v.conj())
    q = hermitize(q)
    q *= geom.size / np.trace(q).real
    return q


@dataclass
class SceneSamplerConfig:
    """Distribution of random scenes drawn by `sample_scene`.

    ``kind`` selects single plane waves or multi-cluster scenes. Cluster
    scenes draw their cluster count uniformly from ``cluster_counts``,
    power fractions from a flat Dirichlet, and centers uniformly over
    [-pi/2, pi/2]^2.
    """

    kind: str = "single-path"
    geometry: ArrayGeometry = ArrayGeometry(4, 4)
    azimuth_spread: float = DEFAULT_SPREAD
    elevation_spread: float = DEFAULT_SPREAD
    subpaths: int = 20
    cluster_counts: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if self.kind not in ("single-path", "multi-cluster"):
            raise ValueError(f"unknown scene kind {self.kind!r}")
        if not self.cluster_counts or any(k < 1 for k in self.cluster_counts):
            raise ValueError(f"cluster counts must be positive, got {self.cluster_counts}")


def sample_scene(seed, config: SceneSamplerConfig | None = None) -> ChannelScene:
    """Draw one random scene.

    Parameters
    ----------
    seed : int, sequence of int, or numpy.random.Generator
        Source of randomness; equal seeds give equal scenes.
    config : SceneSamplerConfig, optional
        Defaults to single plane waves on a 4x4 half-wavelength array.
    """
    if config is None:
        config = SceneSamplerConfig()
    rng = np.random.default_rng(seed)
    if config.kind == "single-path":
        az, el = rng.uniform(-HALF_PI, HALF_PI, size=2)
        return SinglePathScene(config.geometry, float(az), float(el))
    k = int(rng.choice(np.asarray(config.cluster_counts)))
    fractions = rng.dirichlet(np.ones(k))
    clusters = [
        PathCluster(
            azimuth=float(rng.uniform(-HALF_PI, HALF_PI)),
            elevation=float(rng.uniform(-HALF_PI, HALF_PI)),
            azimuth_spread=config.azimuth_spread,
            elevation_spread=config.elevation_spread,
            power_fraction=float(fractions[i]),
            subpaths=config.subpaths,
        )
        for i in range(k)
    ]
    subpath_seed = int(rng.integers(0, 2**63))
    return MultiClusterScene(config.geometry, clusters, seed=subpath_seed)


def scene_to_dict(scene: ChannelScene) -> dict:
    """JSON-ready dict form of a scene (angles in radians)."""
    geom = {"rows": scene.geometry.rows, "cols": scene.geometry.cols,
            "spacing": scene.geometry.spacing}
    if isinstance(scene, SinglePathScene):
        return {"kind": "single-path", "geometry": geom, "azimuth": scene.azimuth,
                "elevation": scene.elevation, "seed": scene.seed}
    return {
        "kind": "multi-cluster",
        "geometry": geom,
        "clusters": [
            {"azimuth": c.azimuth, "elevation": c.elevation,
             "azimuth_spread": c.azimuth_spread, "elevation_spread": c.elevation_spread,
             "power_fraction": c.power_fraction, "subpaths": c.subpaths}
            for c in scene.clusters
        ],
        "seed": scene.seed,
    }


def scene_from_dict(data: dict) -> ChannelScene:
    """Inverse of `scene_to_dict`; validates the result."""
    try:
        geom = ArrayGeometry(**data["geometry"])
        kind = data["kind"]
        if kind == "single-path":
            scene: ChannelScene = SinglePathScene(
                geom, float(data["azimuth"]), float(data["elevation"]),
                seed=int(data.get("seed", 0)))
        elif kind == "multi-cluster":
            clusters = [PathCluster(**c) for c in data["clusters"]]
            scene = MultiClusterScene(geom, clusters, seed=int(data.get("seed", 0)))
        else:
            raise ValueError(f"unknown scene kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scene document: {exc}") from exc
    validate_scene(scene)
    return scene


def save_scene(scene: ChannelScene, path) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)
        fh.write("\n")


def load_scene(path) -> ChannelScene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))
