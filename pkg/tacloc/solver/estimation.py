"""Closed-form pose from a clique of correspondences.

Rotation maximizes the agreement of centred points and of normals jointly (chordal
form of the angular term), solved with the Kabsch SVD and a reflection fix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from tacloc.core.errors import GeometryError
from tacloc.core.geometry import RigidTransform

# Second singular value relative to the first below which the rotation is ambiguous.
DEGENERATE_RATIO = 1e-12


@dataclass(frozen=True, eq=False)
class PoseEstimate:
    transform: RigidTransform
    degenerate: bool


def estimate_rotation(
    src_centered: npt.ArrayLike,
    tgt_centered: npt.ArrayLike,
    src_normals: npt.ArrayLike,
    tgt_normals: npt.ArrayLike,
    alpha: float,
) -> tuple[np.ndarray, bool]:
    """Rotation minimizing ``sum |q' - R p'|^2 + alpha * |m - R n|^2`` and a degeneracy flag.

    Returns the identity, flagged, when two singular values of the cross-covariance
    vanish.
    """
    p = np.asarray(src_centered, dtype=np.float64).reshape(-1, 3)
    q = np.asarray(tgt_centered, dtype=np.float64).reshape(-1, 3)
    n = np.asarray(src_normals, dtype=np.float64).reshape(-1, 3)
    m = np.asarray(tgt_normals, dtype=np.float64).reshape(-1, 3)
    if not (len(p) == len(q) == len(n) == len(m)):
        raise GeometryError("points and normals of a clique must pair up one to one")
    if len(p) == 0:
        raise GeometryError("cannot estimate a rotation from zero pairs")

    cross = q.T @ p + alpha * (m.T @ n)
    u, s, vt = np.linalg.svd(cross)
    if s[0] <= 0 or s[1] < DEGENERATE_RATIO * s[0]:
        return np.eye(3), True
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt, False


def estimate_translation(src_points: npt.ArrayLike, tgt_points: npt.ArrayLike, rotation: np.ndarray) -> np.ndarray:
    """Mean of ``q - R p`` over the pairs."""
    p = np.asarray(src_points, dtype=np.float64).reshape(-1, 3)
    q = np.asarray(tgt_points, dtype=np.float64).reshape(-1, 3)
    if len(p) == 0 or len(p) != len(q):
        raise GeometryError(f"need matching non-empty point sets, got {len(p)} and {len(q)}")
    return (q - p @ np.asarray(rotation).T).mean(axis=0)


def estimate_pose(
    src_points: npt.ArrayLike,
    tgt_points: npt.ArrayLike,
    src_normals: npt.ArrayLike,
    tgt_normals: npt.ArrayLike,
    alpha: float,
) -> PoseEstimate:
    """Centre the pairs, solve the rotation, then the translation."""
    p = np.asarray(src_points, dtype=np.float64).reshape(-1, 3)
    q = np.asarray(tgt_points, dtype=np.float64).reshape(-1, 3)
    rotation, degenerate = estimate_rotation(
        p - p.mean(axis=0), q - q.mean(axis=0), src_normals, tgt_normals, alpha
    )
    return PoseEstimate(RigidTransform(rotation, estimate_translation(p, q, rotation)), degenerate)
