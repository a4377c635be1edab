"""End-to-end registration of a tactile submap onto an object model.

``extract_front_end`` covers downsampling, keypoints, descriptors and matching;
``solve_back_end`` covers the compatibility graph, clique search, per-clique pose
estimation and verification. ``register`` chains the two.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from tacloc.core.config import DEFAULT_CONFIG, MM, PipelineConfig
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.core.io import write_csv
from tacloc.core.spatial import SpatialIndex
from tacloc.features.downsample import voxel_downsample
from tacloc.features.fpfh import fpfh
from tacloc.features.keypoints import select_keypoint_pair
from tacloc.features.matching import Correspondence, match_features
from tacloc.graph.cliques import Clique, enumerate_cliques, select_top_cliques
from tacloc.graph.compatibility import CompatibilityGraph, build_graph
from tacloc.solver.estimation import estimate_pose
from tacloc.solver.refinement import RefinementResult, refine_point_to_plane
from tacloc.solver.verification import (
    AmbiguityCheck,
    PoseHypothesis,
    Selection,
    pose_separation,
    verify_and_select,
)

logger = logging.getLogger(__name__)

# Clique estimates that start within this many voxels (RMS) of an already refined
# start share its refinement.
_DUPLICATE_START = 0.1
_ANCHOR_POINTS = 32


@dataclass
class StageTimings:
    """Wall-clock milliseconds per pipeline stage."""

    downsample: float = 0.0
    keypoints: float = 0.0
    descriptors: float = 0.0
    matching: float = 0.0
    graph: float = 0.0
    cliques: float = 0.0
    estimation: float = 0.0
    verification: float = 0.0

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            setattr(self, stage, getattr(self, stage) + 1e3 * (time.perf_counter() - start))

    def as_rows(self) -> list[tuple[str, float]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    @property
    def total(self) -> float:
        return sum(ms for _, ms in self.as_rows())

    def largest(self, n: int = 2) -> list[str]:
        """Names of the ``n`` slowest stages, slowest first."""
        return [name for name, _ in sorted(self.as_rows(), key=lambda row: -row[1])[:n]]

    def write_csv(self, path: str | Path) -> None:
        write_csv(path, ["stage", "milliseconds"], self.as_rows())


@dataclass(frozen=True, eq=False)
class FrontEnd:
    source: OrientedPointCloud  # downsampled submap
    target: OrientedPointCloud  # downsampled model
    source_keypoints: np.ndarray  # indices into ``source``
    target_keypoints: np.ndarray
    correspondences: list[Correspondence]  # indices into the keypoint arrays
    used_fallback: bool

    @property
    def source_keypoint_cloud(self) -> OrientedPointCloud:
        return self.source.subset(self.source_keypoints)

    @property
    def target_keypoint_cloud(self) -> OrientedPointCloud:
        return self.target.subset(self.target_keypoints)


@dataclass(frozen=True, eq=False)
class BackEnd:
    graph: CompatibilityGraph
    cliques: list[Clique]  # selected candidates
    clique_count: int  # maximal cliques found before selection
    clique_expansions: int
    clique_budget_exhausted: bool
    selection: Optional[Selection]


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    best: Optional[PoseHypothesis]
    hypotheses: list[PoseHypothesis]  # ranked, best first
    mixture_weights: np.ndarray
    timings: StageTimings
    failed: bool
    reason: str = ""
    n_correspondences: int = 0
    n_edges: int = 0
    n_cliques: int = 0
    clique_expansions: int = 0
    used_fallback: bool = False

    @property
    def transform(self) -> RigidTransform:
        """Best pose, or the identity when registration produced no hypothesis."""
        return self.best.transform if self.best is not None else RigidTransform.identity()


def extract_front_end(
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    config: PipelineConfig = DEFAULT_CONFIG,
    timings: Optional[StageTimings] = None,
) -> FrontEnd:
    """Downsample both clouds, detect and describe keypoints, and match descriptors."""
    timings = timings if timings is not None else StageTimings()
    if source.is_empty or target.is_empty:
        raise GeometryError("registration needs non-empty source and target clouds")

    with timings.measure("downsample"):
        src = voxel_downsample(source, config.voxel_size)
        tgt = voxel_downsample(target, config.voxel_size)

    with timings.measure("keypoints"):
        src_sel, tgt_sel = select_keypoint_pair(src, tgt, config)
    used_fallback = src_sel.used_fallback

    with timings.measure("descriptors"):
        src_desc = fpfh(src, src_sel.indices, config.fpfh_radius)
        tgt_desc = fpfh(tgt, tgt_sel.indices, config.fpfh_radius)
    src_keep = ~src_desc.empty
    tgt_keep = ~tgt_desc.empty
    src_kp = src_sel.indices[src_keep]
    tgt_kp = tgt_sel.indices[tgt_keep]

    correspondences: list[Correspondence] = []
    with timings.measure("matching"):
        if len(src_kp) and len(tgt_kp):
            correspondences = match_features(
                src_desc.descriptors[src_keep],
                tgt_desc.descriptors[tgt_keep],
                config.num_initial_correspondences,
            )
    logger.debug(
        "front end: %d/%d points, %d/%d keypoints, %d correspondences",
        len(src),
        len(tgt),
        len(src_kp),
        len(tgt_kp),
        len(correspondences),
    )
    return FrontEnd(src, tgt, src_kp, tgt_kp, correspondences, used_fallback)


def _hypotheses(
    front: FrontEnd,
    cliques: list[Clique],
    graph: CompatibilityGraph,
    config: PipelineConfig,
    timings: StageTimings,
) -> list[PoseHypothesis]:
    src_kp = front.source_keypoint_cloud
    tgt_kp = front.target_keypoint_cloud
    with timings.measure("estimation"):
        estimates = []
        for clique in cliques:
            pairs = [graph.nodes[i] for i in clique.members]
            src = np.array([c.src_index for c in pairs])
            tgt = np.array([c.tgt_index for c in pairs])
            estimates.append(
                estimate_pose(
                    src_kp.points[src],
                    tgt_kp.points[tgt],
                    src_kp.normals[src],
                    tgt_kp.normals[tgt],
                    config.alpha_weight,
                )
            )

    with timings.measure("verification"):
        index = SpatialIndex(front.target.points)
        anchors = front.source.points[:: max(1, len(front.source) // _ANCHOR_POINTS)]
        placed = np.zeros((0, len(anchors), 3))
        refined_at: list[RefinementResult] = []
        reused = 0
        hypotheses = []
        for k, (clique, estimate) in enumerate(zip(cliques, estimates)):
            start = estimate.transform.apply_points(anchors)
            rms = np.sqrt(np.mean(np.sum((placed - start) ** 2, axis=2), axis=1))
            near = np.flatnonzero(rms <= _DUPLICATE_START * config.voxel_size)
            if len(near):
                refined = refined_at[near[0]]
                reused += 1
            else:
                refined = refine_point_to_plane(estimate.transform, front.source, front.target, config, index)
                placed = np.concatenate([placed, start[None]])
                refined_at.append(refined)
            hypotheses.append(
                PoseHypothesis.create(
                    refined.transform,
                    refined.residual,
                    clique.size,
                    refined.converged,
                    clique_index=k,
                    inlier_fraction=refined.inlier_fraction,
                    degenerate=clique.degenerate or estimate.degenerate,
                    constraint=refined.constraint,
                )
            )
    if reused:
        logger.debug("%d of %d clique estimates reused an earlier refinement", reused, len(cliques))
    return hypotheses


def solve_back_end(
    front: FrontEnd,
    config: PipelineConfig = DEFAULT_CONFIG,
    timings: Optional[StageTimings] = None,
) -> BackEnd:
    """Graph, cliques, per-clique estimation and verification for a front end."""
    timings = timings if timings is not None else StageTimings()
    with timings.measure("graph"):
        graph = build_graph(
            front.correspondences, front.source_keypoint_cloud, front.target_keypoint_cloud, config
        )
    with timings.measure("cliques"):
        enumeration = enumerate_cliques(graph, config.clique_budget)
        ranked = enumeration.cliques[: config.max_cliques]
        selected = select_top_cliques(ranked, config.num_candidates) if ranked else []

    selection = None
    if selected:
        hypotheses = _hypotheses(front, selected, graph, config, timings)
        with timings.measure("verification"):
            selection = verify_and_select(hypotheses, AmbiguityCheck.from_config(front.source.points, config))
    return BackEnd(
        graph,
        selected,
        len(enumeration),
        enumeration.expansions,
        enumeration.exhausted,
        selection,
    )


def register(
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    config: PipelineConfig = DEFAULT_CONFIG,
) -> RegistrationResult:
    """Estimate the transform mapping the tactile ``source`` into the model frame of ``target``.

    Front-end starvation (no keypoints, no correspondences, no clique) and a weak
    best hypothesis are reported through ``failed`` and ``reason``; this function
    only raises for invalid input clouds.
    """
    timings = StageTimings()
    front = extract_front_end(source, target, config, timings)
    back = solve_back_end(front, config, timings)
    return assemble_result(front, back, timings, config)


def assemble_result(
    front: FrontEnd,
    back: BackEnd,
    timings: StageTimings,
    config: PipelineConfig = DEFAULT_CONFIG,
) -> RegistrationResult:
    """Decide success and collect the statistics of one front end / back end pair."""
    stats = dict(
        n_correspondences=len(front.correspondences),
        n_edges=back.graph.edge_count,
        n_cliques=back.clique_count,
        clique_expansions=back.clique_expansions,
        used_fallback=front.used_fallback,
    )

    if back.selection is None:
        reason = "no correspondences" if not front.correspondences else "no clique with two or more members"
        logger.info("registration failed: %s", reason)
        return RegistrationResult(None, [], np.zeros(0), timings, True, reason, **stats)

    best = back.selection.best
    reason = failure_reason(back.selection, front.source.points, config)
    if reason:
        logger.info("registration failed: %s", reason)
    return RegistrationResult(
        best,
        back.selection.ranked,
        back.selection.mixture_weights,
        timings,
        bool(reason),
        reason,
        **stats,
    )


def failure_reason(selection: Selection, source_points: np.ndarray, config: PipelineConfig) -> str:
    """Why the selected pose cannot be trusted, or an empty string when it can."""
    best = selection.best
    if selection.failed:
        return "no hypothesis converged"
    if best.inlier_fraction < config.min_inlier_fraction:
        return f"inlier fraction {best.inlier_fraction:.3f} below {config.min_inlier_fraction}"
    if best.constraint < config.min_constraint_ratio:
        return (
            f"unconstrained: the touched surface leaves the pose free to slide or spin "
            f"(constraint {best.constraint:.2g} below {config.min_constraint_ratio:g})"
        )
    if selection.rival is not None:
        rival = selection.rival
        separation = pose_separation(
            best.transform.apply_points(source_points), rival.transform.apply_points(source_points)
        )
        return (
            f"ambiguous: clique {rival.clique_index} fits with residual {rival.residual:.3g} "
            f"at a pose {separation / MM:.1f} mm away"
        )
    return ""
