"""Shared constructors for test geometry."""

import numpy as np
from scipy.spatial.transform import Rotation

from tacloc.core.config import MM
from tacloc.core.geometry import OrientedPointCloud, RigidTransform


def random_transform(rng: np.random.Generator, extent: float = 0.05) -> RigidTransform:
    q = rng.normal(size=4)
    rotation = Rotation.from_quat(q / np.linalg.norm(q)).as_matrix()
    return RigidTransform(rotation, rng.uniform(-extent, extent, size=3))


def plane_cloud(n: int = 20, spacing: float = 1.0 * MM) -> OrientedPointCloud:
    """Square grid in the z = 0 plane with +z normals."""
    xs, ys = np.meshgrid(np.arange(n) * spacing, np.arange(n) * spacing, indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(n * n)])
    return OrientedPointCloud(points, np.tile([0.0, 0.0, 1.0], (n * n, 1)))
