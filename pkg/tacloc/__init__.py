"""Tactile partial-to-full registration and benchmark suite."""

from tacloc.core.config import DEFAULT_CONFIG, PipelineConfig
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply, compose
from tacloc.solver.pipeline import RegistrationResult, register

__all__ = [
    "DEFAULT_CONFIG",
    "PipelineConfig",
    "OrientedPointCloud",
    "RigidTransform",
    "apply",
    "compose",
    "RegistrationResult",
    "register",
]
