"""Area-weighted surface sampling of triangle meshes."""

from __future__ import annotations

from typing import Optional

import numpy as np
import trimesh

from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud
from tacloc.core.mesh import TriangleMesh


def sample_faces(
    mesh: TriangleMesh,
    face_ids: np.ndarray,
    target_count: int,
    rng: np.random.Generator,
) -> OrientedPointCloud:
    """Uniform samples over the faces ``face_ids``; each carries its face normal.

    Draws come from ``rng``, so a seeded generator gives the same cloud every run.
    """
    if target_count < 1:
        raise GeometryError(f"target_count must be >= 1, got {target_count}")
    weights = np.zeros(len(mesh.faces))
    weights[face_ids] = mesh.face_areas[face_ids]
    if not weights.sum() > 0:
        raise GeometryError("cannot sample a mesh whose triangles all have zero area")
    points, chosen = trimesh.sample.sample_surface(
        mesh.to_trimesh(), target_count, face_weight=weights, seed=rng
    )
    return OrientedPointCloud(np.asarray(points), mesh.face_normals[chosen])


def sample_mesh(
    mesh: TriangleMesh,
    target_count: int,
    seed: int,
    rng: Optional[np.random.Generator] = None,
) -> OrientedPointCloud:
    """Area-weighted uniform samples; deterministic given ``seed``."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    return sample_faces(mesh, np.arange(len(mesh.faces)), target_count, rng)
