"""Normal estimation for clouds that arrive without normals."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud
from tacloc.core.spatial import SpatialIndex

logger = logging.getLogger(__name__)

MIN_NORMAL_NEIGHBORS = 3


@dataclass(frozen=True, eq=False)
class NormalEstimate:
    cloud: OrientedPointCloud
    degenerate: np.ndarray  # bool per point: fewer than 3 neighbours, normal set to +z

    @property
    def n_degenerate(self) -> int:
        return int(self.degenerate.sum())


def local_covariances(
    points: np.ndarray, neighborhoods: list[np.ndarray], centers: np.ndarray | None = None
) -> np.ndarray:
    """Covariance of each neighbourhood about its own centroid, shape (n, 3, 3).

    Offsets are taken relative to ``centers`` (default: the query points themselves)
    before accumulating, which keeps the subtraction well conditioned.
    """
    n = len(neighborhoods)
    centers = points[:n] if centers is None else centers
    sizes = np.array([len(m) for m in neighborhoods], dtype=np.int64)
    out = np.zeros((n, 3, 3))
    if sizes.sum() == 0:
        return out
    owners = np.repeat(np.arange(n), sizes)
    members = np.concatenate([m for m in neighborhoods if len(m)])
    offsets = points[members] - centers[owners]

    first = np.zeros((n, 3))
    second = np.zeros((n, 3, 3))
    np.add.at(first, owners, offsets)
    np.add.at(second, owners, offsets[:, :, None] * offsets[:, None, :])
    safe = np.maximum(sizes, 1)[:, None]
    mean = first / safe
    out = second / safe[:, :, None] - mean[:, :, None] * mean[:, None, :]
    out[sizes == 0] = 0.0
    return out


def estimate_normals(
    points: npt.ArrayLike, radius: float, viewpoint: npt.ArrayLike
) -> NormalEstimate:
    """Smallest-eigenvector normals oriented toward ``viewpoint``."""
    if not radius > 0:
        raise GeometryError(f"radius must be > 0, got {radius}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return NormalEstimate(OrientedPointCloud.empty(), np.zeros(0, dtype=bool))

    neighborhoods = SpatialIndex(pts).radius_many(pts, radius)
    sizes = np.array([len(members) for members in neighborhoods])
    # the query point is its own neighbour; 3 neighbours means 3 other points
    degenerate = sizes - 1 < MIN_NORMAL_NEIGHBORS

    _, eigenvectors = np.linalg.eigh(local_covariances(pts, neighborhoods))
    normals = eigenvectors[:, :, 0]  # eigh sorts eigenvalues ascending

    toward = np.asarray(viewpoint, dtype=np.float64) - pts
    flip = np.einsum("ij,ij->i", normals, toward) < 0
    normals[flip] *= -1.0
    normals[degenerate] = (0.0, 0.0, 1.0)

    if degenerate.any():
        logger.debug("%d of %d points have too few neighbours for a normal", degenerate.sum(), len(pts))
    return NormalEstimate(OrientedPointCloud.from_unnormalized(pts, normals), degenerate)
