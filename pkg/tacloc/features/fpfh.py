"""Fast Point Feature Histograms.

Each descriptor holds three 11-bin histograms (33 values) of the Darboux-frame pair
angles between a point and its neighbours: theta (atan2 angle), alpha and phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud
from tacloc.core.spatial import SpatialIndex

BINS_PER_FEATURE = 11
DESCRIPTOR_SIZE = 3 * BINS_PER_FEATURE
_HISTOGRAM_MASS = 100.0


@dataclass(frozen=True, eq=False)
class FPFHResult:
    descriptors: np.ndarray  # (n_keypoints, 33), all bins >= 0
    empty: np.ndarray  # bool per keypoint: no neighbours within the radius

    def __len__(self) -> int:
        return len(self.descriptors)


def pair_features(
    p1: np.ndarray, n1: np.ndarray, p2: np.ndarray, n2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Darboux pair features (theta, alpha, phi) for rows of point pairs, plus a validity mask.

    The pair is ordered so the source normal makes the smaller angle with the
    connecting line, which makes the features symmetric in the pair.
    """
    d = p2 - p1
    dist = np.linalg.norm(d, axis=1)
    valid = dist > 0
    safe = np.where(valid, dist, 1.0)
    cos1 = np.einsum("ij,ij->i", n1, d) / safe
    cos2 = np.einsum("ij,ij->i", n2, d) / safe

    swap = np.arccos(np.clip(np.abs(cos1), 0.0, 1.0)) > np.arccos(np.clip(np.abs(cos2), 0.0, 1.0))
    u = np.where(swap[:, None], n2, n1)
    nt = np.where(swap[:, None], n1, n2)
    d = np.where(swap[:, None], -d, d)
    phi = np.where(swap, -cos2, cos1)

    v = np.cross(d, u)
    v_norm = np.linalg.norm(v, axis=1)
    valid &= v_norm > 0
    v = v / np.where(v_norm > 0, v_norm, 1.0)[:, None]
    w = np.cross(u, v)

    alpha = np.einsum("ij,ij->i", v, nt)
    theta = np.arctan2(np.einsum("ij,ij->i", w, nt), np.einsum("ij,ij->i", u, nt))
    return theta, alpha, phi, valid


def _bin(values: np.ndarray, low: float, high: float) -> np.ndarray:
    idx = np.floor(BINS_PER_FEATURE * (values - low) / (high - low)).astype(np.int64)
    return np.clip(idx, 0, BINS_PER_FEATURE - 1)


def spfh_histograms(
    cloud: OrientedPointCloud, centers: np.ndarray, neighborhoods: list[np.ndarray]
) -> np.ndarray:
    """SPFH (n_centers, 33) for cloud points ``centers`` with the given neighbour lists."""
    sizes = np.array([len(m) for m in neighborhoods], dtype=np.int64)
    hist = np.zeros((len(centers), DESCRIPTOR_SIZE))
    if sizes.sum() == 0:
        return hist
    rows = np.repeat(np.arange(len(centers)), sizes)
    members = np.concatenate([m for m in neighborhoods if len(m)])
    src = centers[rows]

    theta, alpha, phi, valid = pair_features(
        cloud.points[src], cloud.normals[src], cloud.points[members], cloud.normals[members]
    )
    rows = rows[valid]
    counts = np.bincount(rows, minlength=len(centers)).astype(np.float64)
    increment = _HISTOGRAM_MASS / np.maximum(counts, 1.0)

    for block, bins in enumerate(
        (_bin(theta[valid], -np.pi, np.pi), _bin(alpha[valid], -1.0, 1.0), _bin(phi[valid], -1.0, 1.0))
    ):
        np.add.at(hist, (rows, block * BINS_PER_FEATURE + bins), increment[rows])
    return hist


def _normalize_blocks(hist: np.ndarray) -> np.ndarray:
    out = hist.copy()
    for block in range(3):
        cols = slice(block * BINS_PER_FEATURE, (block + 1) * BINS_PER_FEATURE)
        mass = out[:, cols].sum(axis=1, keepdims=True)
        out[:, cols] = np.where(mass > 0, out[:, cols] * _HISTOGRAM_MASS / np.where(mass > 0, mass, 1.0), 0.0)
    return out


def fpfh(cloud: OrientedPointCloud, keypoints: npt.ArrayLike, radius: float) -> FPFHResult:
    """One 33-bin FPFH descriptor per keypoint.

    Two passes: SPFH for every keypoint and every neighbour of a keypoint, then
    ``FPFH(p) = SPFH(p) + (1/k) * sum_k SPFH(p_k) / |p - p_k|``. The weighted
    neighbour sum is normalized per feature block before the point's own SPFH is
    added (unit independent), and the total is normalized again.
    """
    if not radius > 0:
        raise GeometryError(f"radius must be > 0, got {radius}")
    kp = np.asarray(keypoints, dtype=np.int64).reshape(-1)
    if len(kp) == 0:
        return FPFHResult(np.zeros((0, DESCRIPTOR_SIZE)), np.zeros(0, dtype=bool))
    if kp.min() < 0 or kp.max() >= len(cloud):
        raise GeometryError(f"keypoint index out of range for a cloud of {len(cloud)} points")

    index = SpatialIndex(cloud.points)

    def neighbours_of(ids: np.ndarray) -> list[np.ndarray]:
        found = index.radius_many(cloud.points[ids], radius)
        return [members[members != i] for i, members in zip(ids, found)]

    kp_neighbors = neighbours_of(kp)
    involved = np.unique(np.concatenate([kp, *kp_neighbors]))
    row_of = np.full(len(cloud), -1, dtype=np.int64)
    row_of[involved] = np.arange(len(involved))
    simple = spfh_histograms(cloud, involved, neighbours_of(involved))

    descriptors = np.zeros((len(kp), DESCRIPTOR_SIZE))
    empty = np.array([len(m) == 0 for m in kp_neighbors])
    for i, (point, members) in enumerate(zip(kp, kp_neighbors)):
        if len(members) == 0:
            continue
        dist = np.linalg.norm(cloud.points[members] - cloud.points[point], axis=1)
        weights = 1.0 / np.maximum(dist, 1e-12)
        neighbour_term = weights @ simple[row_of[members]] / len(members)
        descriptors[i] = simple[row_of[point]] + _normalize_blocks(neighbour_term[None, :])[0]
    return FPFHResult(_normalize_blocks(descriptors), empty)
