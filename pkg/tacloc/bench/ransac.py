"""Consensus-maximization baseline on the same correspondences as the clique solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tacloc.core.config import DEFAULT_CONFIG, PipelineConfig
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.features.matching import Correspondence
from tacloc.solver.estimation import estimate_pose

logger = logging.getLogger(__name__)

# hypotheses scored per vectorized batch
_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class RansacResult:
    transform: RigidTransform
    n_inliers: int
    failed: bool


def _batched_kabsch(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotations and translations for a batch of (B, k, 3) point triples."""
    p_mean = p.mean(axis=1, keepdims=True)
    q_mean = q.mean(axis=1, keepdims=True)
    h = np.einsum("bki,bkj->bij", p - p_mean, q - q_mean)
    u, _, vt = np.linalg.svd(h)
    v = np.swapaxes(vt, 1, 2)
    d = np.sign(np.linalg.det(v @ np.swapaxes(u, 1, 2)))
    d[d == 0] = 1.0
    fix = np.tile(np.eye(3), (len(p), 1, 1))
    fix[:, 2, 2] = d
    rotations = v @ fix @ np.swapaxes(u, 1, 2)
    translations = q_mean[:, 0] - np.einsum("bij,bj->bi", rotations, p_mean[:, 0])
    return rotations, translations


def ransac_baseline(
    correspondences: Sequence[Correspondence],
    source_keypoints: OrientedPointCloud,
    target_keypoints: OrientedPointCloud,
    config: PipelineConfig = DEFAULT_CONFIG,
    seed: int | None = None,
) -> RansacResult:
    """Three-point RANSAC with the ``delta_d`` inlier test and a Kabsch refit on the winning set.

    Runs exactly ``config.ransac_iterations`` hypotheses; ties in inlier count keep the
    earliest hypothesis, so the result depends only on the inputs and the seed.
    """
    if len(correspondences) < 3:
        raise GeometryError(f"RANSAC needs at least 3 correspondences, got {len(correspondences)}")
    rng = np.random.default_rng(config.seed if seed is None else seed)
    src = source_keypoints.points[[c.src_index for c in correspondences]]
    tgt = target_keypoints.points[[c.tgt_index for c in correspondences]]
    n = len(src)

    best_count, best_mask = -1, None
    remaining = config.ransac_iterations
    while remaining > 0:
        batch = min(_CHUNK, remaining)
        remaining -= batch
        samples = np.argpartition(rng.random((batch, n)), 2, axis=1)[:, :3]
        rotations, translations = _batched_kabsch(src[samples], tgt[samples])
        moved = np.einsum("bij,nj->bni", rotations, src) + translations[:, None, :]
        inliers = np.linalg.norm(tgt[None] - moved, axis=2) < config.delta_d
        counts = inliers.sum(axis=1)
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count, best_mask = int(counts[k]), inliers[k]

    if best_count < 3:
        logger.debug("RANSAC found no model with 3 or more inliers (best %d)", best_count)
        return RansacResult(RigidTransform.identity(), max(best_count, 0), True)

    zeros = np.zeros((best_count, 3))
    refit = estimate_pose(src[best_mask], tgt[best_mask], zeros, zeros, 0.0)
    return RansacResult(refit.transform, best_count, refit.degenerate)
