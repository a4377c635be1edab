"""SE(3) transforms and oriented point clouds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt
from scipy.linalg import polar
from scipy.spatial.transform import Rotation

from tacloc.core.errors import GeometryError

Vec3 = npt.NDArray[np.float64]

ORTHONORMAL_TOL = 1e-9
UNIT_NORMAL_TOL = 1e-6
# Drift beyond this is a corrupted matrix rather than accumulated round-off.
MAX_REPAIRABLE_DRIFT = 1e-3


def _frozen(array: npt.ArrayLike, shape: tuple[int, ...] | None = None) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    if shape is not None and out.shape != shape:
        raise GeometryError(f"expected array of shape {shape}, got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Element of SE(3) acting as ``p -> R p + t``.

    Rotations are stored as matrices. Construction re-orthonormalizes by polar
    decomposition when ``R^T R`` drifts from identity by more than 1e-9.
    """

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64).reshape(-1)
        if rotation.shape != (3, 3):
            raise GeometryError(f"rotation must be 3x3, got {rotation.shape}")
        if translation.shape != (3,):
            raise GeometryError(f"translation must have 3 components, got {translation.shape}")
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise GeometryError("transform contains non-finite values")

        drift = np.max(np.abs(rotation.T @ rotation - np.eye(3)))
        if drift > MAX_REPAIRABLE_DRIFT:
            raise GeometryError(f"rotation is not orthonormal (drift {drift:.3g})")
        if drift > ORTHONORMAL_TOL:
            rotation, _ = polar(rotation)
        if np.linalg.det(rotation) < 0:
            raise GeometryError("rotation has det = -1 (reflection)")

        object.__setattr__(self, "rotation", _frozen(rotation))
        object.__setattr__(self, "translation", _frozen(translation))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: npt.ArrayLike) -> RigidTransform:
        """Build from a 4x4 homogeneous matrix whose last row is ``0 0 0 1``."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise GeometryError(f"homogeneous matrix must be 4x4, got {m.shape}")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-12):
            raise GeometryError(f"last row must be 0 0 0 1, got {m[3].tolist()}")
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_translation(cls, translation: npt.ArrayLike) -> RigidTransform:
        return cls(np.eye(3), translation)

    @classmethod
    def exp(cls, rotation_vector: npt.ArrayLike, translation: npt.ArrayLike) -> RigidTransform:
        """Transform from a rotation vector (axis * angle) and a translation."""
        rotation = Rotation.from_rotvec(np.asarray(rotation_vector, dtype=np.float64)).as_matrix()
        return cls(rotation, translation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> RigidTransform:
        r_t = self.rotation.T
        return RigidTransform(r_t, -r_t @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """Return ``self * other`` (apply ``other`` first)."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return self.compose(other)

    def apply_points(self, points: npt.ArrayLike) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def apply_directions(self, directions: npt.ArrayLike) -> np.ndarray:
        return np.asarray(directions, dtype=np.float64) @ self.rotation.T

    def rotation_angle(self) -> float:
        """Geodesic angle of the rotation part, in radians."""
        cos_angle = (np.trace(self.rotation) - 1.0) / 2.0
        return float(np.arccos(np.clip(cos_angle, -1.0, 1.0)))

    def __repr__(self) -> str:
        rotvec = Rotation.from_matrix(self.rotation).as_rotvec()
        return f"RigidTransform(rotvec={np.round(rotvec, 6).tolist()}, t={np.round(self.translation, 9).tolist()})"


@dataclass(frozen=True, eq=False)
class OrientedPointCloud:
    """Positions (metres) paired with unit normals."""

    points: np.ndarray
    normals: np.ndarray

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        normals = np.array(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(points) != len(normals):
            raise GeometryError(
                f"points and normals must have equal length, got {len(points)} and {len(normals)}"
            )
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(normals))):
            raise GeometryError("cloud contains non-finite values")
        if len(normals):
            lengths = np.linalg.norm(normals, axis=1)
            worst = float(np.max(np.abs(lengths - 1.0)))
            if worst > UNIT_NORMAL_TOL:
                raise GeometryError(f"normals must be unit length (worst deviation {worst:.3g})")
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "normals", _frozen(normals))

    @classmethod
    def empty(cls) -> OrientedPointCloud:
        return cls(np.zeros((0, 3)), np.zeros((0, 3)))

    @classmethod
    def from_unnormalized(cls, points: npt.ArrayLike, normals: npt.ArrayLike) -> OrientedPointCloud:
        """Build a cloud after rescaling every normal to unit length."""
        normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
        lengths = np.linalg.norm(normals, axis=1, keepdims=True)
        if np.any(lengths < 1e-12):
            raise GeometryError("cannot normalize a zero-length normal")
        return cls(points, normals / lengths)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def subset(self, indices: Sequence[int] | np.ndarray) -> OrientedPointCloud:
        idx = np.asarray(indices, dtype=np.int64)
        return OrientedPointCloud(self.points[idx], self.normals[idx])

    def centroid(self) -> Vec3:
        if self.is_empty:
            raise GeometryError("centroid of an empty cloud")
        return self.points.mean(axis=0)

    def bounding_box_diagonal(self) -> float:
        if self.is_empty:
            return 0.0
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))

    @staticmethod
    def concatenate(clouds: Iterable[OrientedPointCloud]) -> OrientedPointCloud:
        clouds = list(clouds)
        if not clouds:
            return OrientedPointCloud.empty()
        return OrientedPointCloud(
            np.concatenate([c.points for c in clouds]),
            np.concatenate([c.normals for c in clouds]),
        )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """``a * b``: rotation ``R_a R_b``, translation ``R_a t_b + t_a``."""
    return a.compose(b)


def apply(transform: RigidTransform, cloud: OrientedPointCloud) -> OrientedPointCloud:
    """Move points by ``R p + t`` and rotate normals by ``R n``."""
    return OrientedPointCloud(
        transform.apply_points(cloud.points),
        transform.apply_directions(cloud.normals),
    )
