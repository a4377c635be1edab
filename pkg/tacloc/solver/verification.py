"""Hypothesis weighting and maximum-likelihood selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from tacloc.core.config import PipelineConfig
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import RigidTransform
from tacloc.core.io import write_csv


@dataclass(frozen=True, eq=False)
class PoseHypothesis:
    """A refined pose candidate produced from one clique."""

    transform: RigidTransform
    residual: float
    weight: float
    clique_size: int
    converged: bool
    clique_index: int = 0
    inlier_fraction: float = 0.0
    degenerate: bool = False
    constraint: float = 1.0  # constraint_ratio at the refined pose

    def __post_init__(self) -> None:
        if not self.residual >= 0:
            raise GeometryError(f"residual must be >= 0, got {self.residual}")
        if self.clique_size < 1:
            raise GeometryError(f"clique_size must be >= 1, got {self.clique_size}")
        if not 0 < self.weight <= 1:
            raise GeometryError(f"weight must lie in (0, 1], got {self.weight}")

    @classmethod
    def create(
        cls,
        transform: RigidTransform,
        residual: float,
        clique_size: int,
        converged: bool,
        clique_index: int = 0,
        inlier_fraction: float = 0.0,
        degenerate: bool = False,
        constraint: float = 1.0,
    ) -> PoseHypothesis:
        """Hypothesis with ``weight = exp(-residual)``."""
        return cls(
            transform,
            residual,
            math.exp(-residual),
            clique_size,
            converged,
            clique_index,
            inlier_fraction,
            degenerate,
            constraint,
        )

    def sort_key(self) -> tuple[bool, float, int, int]:
        """Converged hypotheses first, then residual, larger clique, lower clique index."""
        return (not self.converged, self.residual, -self.clique_size, self.clique_index)


@dataclass(frozen=True, eq=False)
class Selection:
    best: PoseHypothesis
    ranked: list[PoseHypothesis]  # best first
    mixture_weights: np.ndarray  # w_k / sum(w), aligned with ``ranked``
    failed: bool  # no hypothesis converged
    rival: Optional[PoseHypothesis] = None  # a distinct pose that fits about as well as ``best``


@dataclass(frozen=True, eq=False)
class AmbiguityCheck:
    """When a second, clearly different pose explains the data nearly as well as the best.

    A converged hypothesis with enough inliers is a rival when its residual is at most
    ``ratio * best + floor`` and it moves ``points`` by more than ``distance`` (RMS)
    away from where the best pose puts them. ``ratio == 0`` turns the check off.
    """

    points: np.ndarray
    ratio: float
    floor: float
    distance: float
    min_inlier_fraction: float = 0.0

    @classmethod
    def from_config(cls, points: np.ndarray, config: PipelineConfig) -> AmbiguityCheck:
        return cls(
            points,
            config.ambiguity_ratio,
            config.ambiguity_residual_floor,
            config.ambiguity_distance,
            config.min_inlier_fraction,
        )

    def rival_of(self, best: PoseHypothesis, ranked: Sequence[PoseHypothesis]) -> Optional[PoseHypothesis]:
        if self.ratio == 0 or not best.converged or len(self.points) == 0:
            return None
        limit = self.ratio * best.residual + self.floor
        anchor = best.transform.apply_points(self.points)
        for h in ranked:
            if h is best or not h.converged or h.residual > limit:
                continue
            if h.inlier_fraction < self.min_inlier_fraction:
                continue
            moved = h.transform.apply_points(self.points)
            if pose_separation(anchor, moved) > self.distance:
                return h
        return None


def pose_separation(a: np.ndarray, b: np.ndarray) -> float:
    """RMS distance between two placements of the same points."""
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))))


def verify_and_select(
    hypotheses: Sequence[PoseHypothesis],
    ambiguity: Optional[AmbiguityCheck] = None,
) -> Selection:
    """Pick the converged hypothesis of largest weight (smallest residual).

    Ties go to the larger clique, then the smaller clique index, so the choice does
    not depend on the order of ``hypotheses``. Unconverged hypotheses are only
    selected when nothing converged, and then the selection is marked failed.
    """
    if not hypotheses:
        raise GeometryError("verify_and_select needs at least one hypothesis")
    ranked = sorted(hypotheses, key=PoseHypothesis.sort_key)
    weights = np.array([h.weight for h in ranked])
    total = weights.sum()
    mixture = weights / total if total > 0 else np.full(len(ranked), 1.0 / len(ranked))
    best = ranked[0]
    rival = ambiguity.rival_of(best, ranked) if ambiguity is not None else None
    return Selection(best, ranked, mixture, failed=not best.converged, rival=rival)


def write_hypotheses(path: str | Path, ranked: Sequence[PoseHypothesis]) -> None:
    """``rank,residual,weight,clique_size,converged`` plus the 16 matrix entries per row."""
    header = ["rank", "residual", "weight", "clique_size", "converged"]
    header += [f"m{r}{c}" for r in range(4) for c in range(4)]
    write_csv(
        path,
        header,
        (
            [rank, h.residual, h.weight, h.clique_size, h.converged, *h.transform.as_matrix().reshape(-1)]
            for rank, h in enumerate(ranked)
        ),
    )
