"""Intrinsic Shape Signature keypoints with a uniform-subsampling fallback."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from tacloc.core.config import PipelineConfig
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud
from tacloc.core.spatial import SpatialIndex
from tacloc.features.downsample import voxel_keys
from tacloc.features.normals import local_covariances

logger = logging.getLogger(__name__)

# Smallest eigenvalue relative to the largest below which a neighbourhood is planar.
PLANAR_RATIO = 1e-10
# Saliencies within this relative distance are tied; the lower index wins.
SALIENCY_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class KeypointSelection:
    indices: np.ndarray
    used_fallback: bool

    def __len__(self) -> int:
        return len(self.indices)


def scatter_eigenvalues(cloud: OrientedPointCloud, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues (n, 3) of each point's neighbourhood scatter, and neighbour counts."""
    index = SpatialIndex(cloud.points)
    neighborhoods = index.radius_many(cloud.points, radius)
    counts = np.array([len(m) - 1 for m in neighborhoods], dtype=np.int64)
    eigenvalues = np.linalg.eigvalsh(local_covariances(cloud.points, neighborhoods))[:, ::-1]
    return np.maximum(eigenvalues, 0.0), counts


def iss_keypoints(
    cloud: OrientedPointCloud,
    salient_radius: float,
    nms_radius: float,
    gamma21: float,
    gamma32: float,
    min_neighbors: int = 5,
) -> np.ndarray:
    """Sorted indices of ISS keypoints; empty when no point qualifies."""
    if not (salient_radius > 0 and nms_radius > 0):
        raise GeometryError(f"ISS radii must be > 0, got {salient_radius} and {nms_radius}")
    if not (0 < gamma21 < 1 and 0 < gamma32 < 1):
        raise GeometryError(f"ISS ratios must lie in (0, 1), got {gamma21} and {gamma32}")
    if cloud.is_empty:
        return np.zeros(0, dtype=np.int64)

    lam, counts = scatter_eigenvalues(cloud, salient_radius)
    l1, l2, l3 = lam[:, 0], lam[:, 1], lam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        candidate = (
            (counts >= min_neighbors)
            & (l3 > PLANAR_RATIO * l1)
            & (l2 < gamma21 * l1)
            & (l3 < gamma32 * l2)
        )
    cand_idx = np.flatnonzero(candidate)
    if len(cand_idx) == 0:
        return cand_idx.astype(np.int64)

    # non-maximum suppression on the smallest eigenvalue among candidates
    cand_index = SpatialIndex(cloud.points[cand_idx])
    saliency = l3[cand_idx]
    keep = []
    for local, rivals in enumerate(cand_index.radius_many(cloud.points[cand_idx], nms_radius)):
        rivals = rivals[rivals != local]
        mine = saliency[local]
        theirs = saliency[rivals]
        tied = np.abs(theirs - mine) <= SALIENCY_RTOL * np.maximum(theirs, mine)
        beaten = (~tied & (theirs > mine)) | (tied & (cand_idx[rivals] < cand_idx[local]))
        if not beaten.any():
            keep.append(cand_idx[local])
    return np.array(sorted(keep), dtype=np.int64)


def uniform_keypoints(cloud: OrientedPointCloud, spacing: float) -> np.ndarray:
    """Lowest-index point of every occupied cell of size ``spacing``."""
    if cloud.is_empty:
        return np.zeros(0, dtype=np.int64)
    _, first = np.unique(voxel_keys(cloud.points, spacing), axis=0, return_index=True)
    return np.sort(first).astype(np.int64)


def _iss(cloud: OrientedPointCloud, config: PipelineConfig) -> np.ndarray:
    return iss_keypoints(
        cloud,
        config.iss_salient_radius,
        config.iss_nms_radius,
        config.iss_gamma21,
        config.iss_gamma32,
        config.iss_min_neighbors,
    )


def select_keypoint_pair(
    source: OrientedPointCloud, target: OrientedPointCloud, config: PipelineConfig
) -> tuple[KeypointSelection, KeypointSelection]:
    """Keypoints for both clouds from one detector.

    ISS is used when it finds at least ``min_keypoints`` on each cloud; otherwise
    both clouds fall back to uniform subsampling so their descriptors are computed
    around comparable points.
    """
    src = _iss(source, config)
    tgt = _iss(target, config)
    if len(src) >= config.min_keypoints and len(tgt) >= config.min_keypoints:
        return KeypointSelection(src, used_fallback=False), KeypointSelection(tgt, used_fallback=False)
    logger.debug(
        "ISS found %d source and %d target keypoints (< %d); both clouds use uniform subsampling",
        len(src),
        len(tgt),
        config.min_keypoints,
    )
    return (
        KeypointSelection(uniform_keypoints(source, config.fallback_spacing), used_fallback=True),
        KeypointSelection(uniform_keypoints(target, config.fallback_spacing), used_fallback=True),
    )
