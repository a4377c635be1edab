"""Registration error metrics and recall curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from tacloc.bench.config import BENCH_SETTINGS
from tacloc.core.geometry import RigidTransform
from tacloc.solver.pipeline import StageTimings


def rotation_error(gt: RigidTransform, est: RigidTransform) -> float:
    """Geodesic angle between the two rotations, in degrees."""
    cos_angle = (np.trace(gt.rotation.T @ est.rotation) - 1.0) / 2.0
    return math.degrees(math.acos(float(np.clip(cos_angle, -1.0, 1.0))))


def translation_error(gt: RigidTransform, est: RigidTransform) -> float:
    """Euclidean distance between the translations, in metres."""
    return float(np.linalg.norm(gt.translation - est.translation))


@dataclass(frozen=True)
class RegistrationMetrics:
    re: float  # degrees
    te: float  # metres
    success: bool
    timings: Optional[StageTimings] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.re <= 180.0:
            raise ValueError(f"re must lie in [0, 180] degrees, got {self.re}")
        if not self.te >= 0:
            raise ValueError(f"te must be >= 0, got {self.te}")


def score_against_orbit(
    gt: RigidTransform, est: RigidTransform, symmetries: Sequence[np.ndarray] = (np.eye(3),)
) -> tuple[float, float]:
    """Smallest (RE, TE) of ``est`` against every symmetry-equivalent ground truth.

    A symmetry ``S`` of the model maps the true pose ``gt`` to the equally valid
    ``S * gt``. The comparison is lexicographic on (RE, TE).
    """
    best = None
    for s in symmetries:
        equivalent = RigidTransform(s, np.zeros(3)) @ gt
        errors = (rotation_error(equivalent, est), translation_error(equivalent, est))
        if best is None or errors < best:
            best = errors
    return best


def evaluate(
    gt: RigidTransform,
    est: RigidTransform,
    failed: bool = False,
    symmetries: Sequence[np.ndarray] = (np.eye(3),),
    rotation_threshold: float = BENCH_SETTINGS.success_rotation,
    translation_threshold: float = BENCH_SETTINGS.success_translation,
    timings: Optional[StageTimings] = None,
) -> RegistrationMetrics:
    """Errors of ``est`` and success (RE and TE strictly under the thresholds, not failed)."""
    re, te = score_against_orbit(gt, est, symmetries)
    success = (not failed) and re < math.degrees(rotation_threshold) and te < translation_threshold
    return RegistrationMetrics(re, te, success, timings)


@dataclass(frozen=True)
class RecallPoint:
    criterion: str  # "rotation" (degrees) or "translation" (metres)
    threshold: float
    recall: float


def recall_curve(
    results: Sequence[RegistrationMetrics],
    re_thresholds: Sequence[float],
    te_thresholds: Sequence[float],
) -> list[RecallPoint]:
    """Fraction of trials with RE < threshold (degrees) and TE < threshold (metres)."""
    if not results:
        raise ValueError("recall_curve needs at least one result")
    re = np.array([r.re for r in results])
    te = np.array([r.te for r in results])
    rows = [RecallPoint("rotation", float(t), float(np.mean(re < t))) for t in re_thresholds]
    rows += [RecallPoint("translation", float(t), float(np.mean(te < t))) for t in te_thresholds]
    return rows
