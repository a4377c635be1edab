"""Voxel-grid downsampling."""

import numpy as np

from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud

_MIN_MEAN_NORMAL = 1e-6


def voxel_keys(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Integer voxel coordinates of each point."""
    return np.floor(np.asarray(points) / voxel_size).astype(np.int64)


def voxel_downsample(cloud: OrientedPointCloud, voxel_size: float) -> OrientedPointCloud:
    """One point per occupied voxel: member centroid with renormalized mean normal.

    Voxels whose member normals cancel out (mean length < 1e-6) are dropped. Output
    is ordered by voxel coordinate, so the result does not depend on input order
    beyond floating-point summation.
    """
    if not voxel_size > 0:
        raise GeometryError(f"voxel_size must be > 0, got {voxel_size}")
    if cloud.is_empty:
        return cloud

    _, inverse, counts = np.unique(
        voxel_keys(cloud.points, voxel_size), axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    n_voxels = len(counts)

    point_sums = np.zeros((n_voxels, 3))
    normal_sums = np.zeros((n_voxels, 3))
    np.add.at(point_sums, inverse, cloud.points)
    np.add.at(normal_sums, inverse, cloud.normals)

    centroids = point_sums / counts[:, None]
    mean_normals = normal_sums / counts[:, None]
    lengths = np.linalg.norm(mean_normals, axis=1)
    keep = lengths >= _MIN_MEAN_NORMAL
    return OrientedPointCloud(centroids[keep], mean_normals[keep] / lengths[keep, None])
