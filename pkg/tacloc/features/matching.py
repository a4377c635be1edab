"""Manhattan-distance matching of FPFH descriptors."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from tacloc.core.errors import GeometryError
from tacloc.core.io import write_csv

# Source rows compared against all targets per cdist call.
_CHUNK_ROWS = 512


@dataclass(frozen=True)
class Correspondence:
    """Putative match between a source keypoint and a target keypoint."""

    src_index: int
    tgt_index: int
    feature_distance: float

    def __post_init__(self) -> None:
        if self.src_index < 0 or self.tgt_index < 0:
            raise GeometryError(
                f"keypoint indices must be >= 0, got ({self.src_index}, {self.tgt_index})"
            )
        if not self.feature_distance >= 0:
            raise GeometryError(f"feature_distance must be >= 0, got {self.feature_distance}")


def nearest_descriptors(src_desc: np.ndarray, tgt_desc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each source row, the lowest-index target row at minimal L1 distance, and that distance."""
    src = np.asarray(src_desc, dtype=np.float64)
    tgt = np.asarray(tgt_desc, dtype=np.float64)
    best = np.empty(len(src), dtype=np.int64)
    dist = np.empty(len(src))
    for start in range(0, len(src), _CHUNK_ROWS):
        block = cdist(src[start : start + _CHUNK_ROWS], tgt, metric="cityblock")
        idx = np.argmin(block, axis=1)
        best[start : start + len(block)] = idx
        dist[start : start + len(block)] = block[np.arange(len(block)), idx]
    return best, dist


def match_features(src_desc: np.ndarray, tgt_desc: np.ndarray, max_matches: int) -> list[Correspondence]:
    """Source-to-target nearest neighbours, sorted by (distance, src, tgt) and truncated."""
    if max_matches < 1:
        raise GeometryError(f"max_matches must be >= 1, got {max_matches}")
    if len(src_desc) == 0 or len(tgt_desc) == 0:
        raise GeometryError("cannot match against an empty descriptor set")
    tgt_idx, dist = nearest_descriptors(src_desc, tgt_desc)
    src_idx = np.arange(len(tgt_idx))
    order = np.lexsort((tgt_idx, src_idx, dist))[:max_matches]
    return [Correspondence(int(src_idx[k]), int(tgt_idx[k]), float(dist[k])) for k in order]


def write_correspondences(path: str | Path, correspondences: list[Correspondence]) -> None:
    write_csv(
        path,
        ["src_index", "tgt_index", "feature_distance"],
        ((c.src_index, c.tgt_index, c.feature_distance) for c in correspondences),
    )
