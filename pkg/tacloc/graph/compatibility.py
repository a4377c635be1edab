"""Compatibility graph over putative correspondences.

Two correspondences are compatible when the source pair and the target pair agree
in length (within ``delta_d``), in the angle between their normals (within
``delta_alpha``), and share neither a source nor a target keypoint. All three
checks are applied while the graph is built, so inconsistent edges never exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from tacloc.core.config import PipelineConfig
from tacloc.core.geometry import OrientedPointCloud
from tacloc.features.matching import Correspondence


def normal_angle(n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    """Unsigned angle in [0, pi] between unit vectors (row-wise or broadcast)."""
    return np.arccos(np.clip(np.sum(n1 * n2, axis=-1), -1.0, 1.0))


def pairwise_consistent(
    a: Correspondence,
    b: Correspondence,
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    delta_d: float,
    delta_alpha: float,
) -> bool:
    if a.src_index == b.src_index or a.tgt_index == b.tgt_index:
        return False
    d_src = np.linalg.norm(source.points[a.src_index] - source.points[b.src_index])
    d_tgt = np.linalg.norm(target.points[a.tgt_index] - target.points[b.tgt_index])
    if not abs(d_src - d_tgt) < delta_d:
        return False
    a_src = normal_angle(source.normals[a.src_index], source.normals[b.src_index])
    a_tgt = normal_angle(target.normals[a.tgt_index], target.normals[b.tgt_index])
    return bool(abs(a_src - a_tgt) < delta_alpha)


@dataclass(frozen=True, eq=False)
class CompatibilityGraph:
    nodes: list[Correspondence]
    adjacency: np.ndarray  # (n, n) bool, symmetric, zero diagonal

    def __post_init__(self) -> None:
        adjacency = np.array(self.adjacency, dtype=bool)
        adjacency.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, k=1).sum())

    @property
    def density(self) -> float:
        n = len(self.nodes)
        return 0.0 if n < 2 else 2.0 * self.edge_count / (n * (n - 1))

    def neighbors(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[node])

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def write_edge_list(self, path: str | Path) -> None:
        Path(path).write_text("".join(f"{i} {j}\n" for i, j in self.edges()))


def compatibility_matrix(
    correspondences: Sequence[Correspondence],
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    delta_d: float,
    delta_alpha: float,
) -> np.ndarray:
    """Vectorized ``pairwise_consistent`` over all pairs."""
    n = len(correspondences)
    if n == 0:
        return np.zeros((0, 0), dtype=bool)
    src = np.array([c.src_index for c in correspondences], dtype=np.int64)
    tgt = np.array([c.tgt_index for c in correspondences], dtype=np.int64)
    ps, ns = source.points[src], source.normals[src]
    pt, nt = target.points[tgt], target.normals[tgt]

    d_src = np.linalg.norm(ps[:, None, :] - ps[None, :, :], axis=-1)
    d_tgt = np.linalg.norm(pt[:, None, :] - pt[None, :, :], axis=-1)
    a_src = normal_angle(ns[:, None, :], ns[None, :, :])
    a_tgt = normal_angle(nt[:, None, :], nt[None, :, :])

    consistent = (np.abs(d_src - d_tgt) < delta_d) & (np.abs(a_src - a_tgt) < delta_alpha)
    consistent &= src[:, None] != src[None, :]
    consistent &= tgt[:, None] != tgt[None, :]
    np.fill_diagonal(consistent, False)
    return consistent


def build_graph(
    correspondences: Sequence[Correspondence],
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    config: PipelineConfig,
) -> CompatibilityGraph:
    """One node per correspondence, one edge per consistent pair.

    ``source`` and ``target`` are the keypoint clouds the correspondence indices refer to.
    """
    adjacency = compatibility_matrix(
        correspondences, source, target, config.delta_d, config.delta_alpha
    )
    return CompatibilityGraph(list(correspondences), adjacency)
