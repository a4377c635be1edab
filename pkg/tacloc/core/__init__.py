"""Geometry primitives, spatial index, configuration and file formats."""

from tacloc.core.config import DEFAULT_CONFIG, PipelineConfig
from tacloc.core.errors import ConfigError, FormatError, GeometryError, PatchGrowthError, TaclocError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, Vec3, apply, compose
from tacloc.core.mesh import TriangleMesh
from tacloc.core.spatial import SpatialIndex, brute_force_nearest

__all__ = [
    "DEFAULT_CONFIG",
    "PipelineConfig",
    "ConfigError",
    "FormatError",
    "GeometryError",
    "PatchGrowthError",
    "TaclocError",
    "OrientedPointCloud",
    "RigidTransform",
    "Vec3",
    "apply",
    "compose",
    "TriangleMesh",
    "SpatialIndex",
    "brute_force_nearest",
]
