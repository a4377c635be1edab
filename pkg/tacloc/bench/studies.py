"""Benchmark studies over synthetic scenes.

Every study returns row dataclasses carrying a ``HEADER`` and ``as_row()`` in CSV
units (millimetres, degrees). Only columns named ``*milliseconds`` hold wall-clock
measurements; everything else is reproducible from the seeds and the config.
"""

from __future__ import annotations

import functools
import logging
import math
import time
from dataclasses import dataclass
from typing import ClassVar, Optional, Sequence

import numpy as np

from tacloc.bench.config import BENCH_SETTINGS
from tacloc.bench.metrics import RegistrationMetrics, evaluate, recall_curve
from tacloc.bench.ransac import ransac_baseline
from tacloc.bench.runner import TrialRunner
from tacloc.bench.scene import NoiseSpec, SyntheticScene, generate_scene, generate_sliding_scene
from tacloc.bench.shapes import build_mesh, symmetries_of
from tacloc.core.config import DEFAULT_CONFIG, MM, PipelineConfig
from tacloc.core.errors import GeometryError
from tacloc.core.mesh import TriangleMesh
from tacloc.graph.cliques import enumerate_cliques
from tacloc.graph.compatibility import build_graph
from tacloc.solver.pipeline import (
    FrontEnd,
    StageTimings,
    assemble_result,
    extract_front_end,
    register,
    solve_back_end,
)

logger = logging.getLogger(__name__)

_SERIAL = TrialRunner(n_workers=1)

# metrics recorded for a trial that could not produce an estimate at all
_NO_ESTIMATE = RegistrationMetrics(re=180.0, te=math.inf, success=False)

_mesh = functools.lru_cache(maxsize=None)(build_mesh)


# --- scenes --------------------------------------------------------------------------


def _scene_item(
    item: tuple[str, int], *, patch_fraction: float, noise: NoiseSpec, target_samples: Optional[int]
) -> SyntheticScene:
    name, seed = item
    return generate_scene(_mesh(name), patch_fraction, noise, seed, target_samples)


def generate_scenes(
    mesh_names: Sequence[str],
    seeds: Sequence[int],
    patch_fraction: float = BENCH_SETTINGS.patch_fraction,
    noise: NoiseSpec = NoiseSpec(),
    target_samples: Optional[int] = None,
    runner: Optional[TrialRunner] = None,
) -> list[SyntheticScene]:
    """One scene per (mesh, seed), mesh-major."""
    items = [(name, seed) for name in mesh_names for seed in seeds]
    trial = functools.partial(
        _scene_item, patch_fraction=patch_fraction, noise=noise, target_samples=target_samples
    )
    return (runner or _SERIAL).map(trial, items)


# --- recall --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    HEADER: ClassVar[tuple[str, ...]] = (
        "mesh",
        "seed",
        "method",
        "rotation_error_deg",
        "translation_error_mm",
        "success",
        "failed",
        "milliseconds",
    )

    mesh: str
    seed: int
    method: str
    metrics: RegistrationMetrics
    failed: bool
    milliseconds: float

    def as_row(self) -> tuple:
        m = self.metrics
        return (self.mesh, self.seed, self.method, m.re, m.te / MM, m.success, self.failed, self.milliseconds)


def evaluate_scene(scene: SyntheticScene, *, config: PipelineConfig) -> list[TrialRecord]:
    """Register one scene with the clique solver and with RANSAC on the same correspondences."""
    symmetries = symmetries_of(scene.mesh_name)
    timings = StageTimings()
    front = extract_front_end(scene.source, scene.target, config, timings)
    front_ms = timings.total
    back = solve_back_end(front, config, timings)
    result = assemble_result(front, back, timings, config)
    records = [
        TrialRecord(
            scene.mesh_name,
            scene.seed,
            "tacloc",
            evaluate(scene.gt, result.transform, result.failed, symmetries, timings=timings),
            result.failed,
            timings.total,
        )
    ]

    start = time.perf_counter()
    try:
        baseline = ransac_baseline(
            front.correspondences,
            front.source_keypoint_cloud,
            front.target_keypoint_cloud,
            config,
            seed=scene.seed,
        )
        metrics, failed = evaluate(scene.gt, baseline.transform, baseline.failed, symmetries), baseline.failed
    except GeometryError as exc:
        logger.info("RANSAC skipped on %s seed %d: %s", scene.mesh_name, scene.seed, exc)
        metrics, failed = _NO_ESTIMATE, True
    ransac_ms = front_ms + 1e3 * (time.perf_counter() - start)
    records.append(TrialRecord(scene.mesh_name, scene.seed, "ransac", metrics, failed, ransac_ms))
    return records


def run_recall_benchmark(
    scenes: Sequence[SyntheticScene],
    config: PipelineConfig = DEFAULT_CONFIG,
    runner: Optional[TrialRunner] = None,
) -> list[TrialRecord]:
    """Clique-solver and RANSAC records for every scene, in scene order."""
    per_scene = (runner or _SERIAL).map(functools.partial(evaluate_scene, config=config), list(scenes))
    return [record for records in per_scene for record in records]


@dataclass(frozen=True)
class RecallRow:
    HEADER: ClassVar[tuple[str, ...]] = ("method", "criterion", "threshold", "recall")

    method: str
    criterion: str  # "rotation" thresholds in degrees, "translation" in millimetres
    threshold: float
    recall: float

    def as_row(self) -> tuple:
        return (self.method, self.criterion, self.threshold, self.recall)


def recall_table(
    records: Sequence[TrialRecord],
    rotation_thresholds: Sequence[float] = BENCH_SETTINGS.recall_rotation_thresholds,
    translation_thresholds: Sequence[float] = BENCH_SETTINGS.recall_translation_thresholds,
) -> list[RecallRow]:
    """Recall curves per method; thresholds in radians and metres."""
    rows = []
    for method in dict.fromkeys(r.method for r in records):
        metrics = [r.metrics for r in records if r.method == method]
        curve = recall_curve(metrics, [math.degrees(t) for t in rotation_thresholds], translation_thresholds)
        for point in curve:
            threshold = point.threshold if point.criterion == "rotation" else point.threshold / MM
            rows.append(RecallRow(method, point.criterion, threshold, point.recall))
    return rows


def success_rates(records: Sequence[TrialRecord]) -> dict[str, float]:
    rates = {}
    for method in dict.fromkeys(r.method for r in records):
        rates[method] = float(np.mean([r.metrics.success for r in records if r.method == method]))
    return rates


# --- pruning and threshold sweeps ----------------------------------------------------


@dataclass(frozen=True)
class CliqueStats:
    edges: int
    cliques: int
    expansions: int
    milliseconds: float
    exhausted: bool


def clique_stats(front: FrontEnd, config: PipelineConfig) -> CliqueStats:
    """Graph size and clique-extraction effort for one front end under ``config``'s thresholds."""
    timings = StageTimings()
    with timings.measure("graph"):
        graph = build_graph(
            front.correspondences, front.source_keypoint_cloud, front.target_keypoint_cloud, config
        )
    with timings.measure("cliques"):
        enumeration = enumerate_cliques(graph, config.clique_budget)
    return CliqueStats(
        graph.edge_count, len(enumeration), enumeration.expansions, timings.cliques, enumeration.exhausted
    )


def _variant_stats(scene: SyntheticScene, *, variants: Sequence[PipelineConfig]) -> list[CliqueStats]:
    # thresholds do not reach the front end, so one front end serves every variant
    front = extract_front_end(scene.source, scene.target, variants[0])
    return [clique_stats(front, variant) for variant in variants]


def _sweep(
    scenes: Sequence[SyntheticScene], variants: list[PipelineConfig], runner: Optional[TrialRunner]
) -> list[list[CliqueStats]]:
    """Per-variant lists of per-scene statistics."""
    if not scenes or not variants:
        raise ValueError("a sweep needs at least one scene and one threshold setting")
    per_scene = (runner or _SERIAL).map(functools.partial(_variant_stats, variants=variants), list(scenes))
    return [[stats[k] for stats in per_scene] for k in range(len(variants))]


@dataclass(frozen=True)
class SweepRow:
    HEADER: ClassVar[tuple[str, ...]] = (
        "delta_d_mm",
        "delta_alpha_deg",
        "mean_edges",
        "mean_cliques",
        "mean_expansions",
        "budget_exhausted",
        "mean_clique_milliseconds",
    )

    delta_d: float
    delta_alpha: float
    mean_edges: float
    mean_cliques: float
    mean_expansions: float
    budget_exhausted: int  # scenes whose clique search hit the budget
    mean_clique_milliseconds: float

    @classmethod
    def aggregate(cls, config: PipelineConfig, stats: Sequence[CliqueStats]) -> SweepRow:
        return cls(
            config.delta_d,
            config.delta_alpha,
            float(np.mean([s.edges for s in stats])),
            float(np.mean([s.cliques for s in stats])),
            float(np.mean([s.expansions for s in stats])),
            sum(s.exhausted for s in stats),
            float(np.mean([s.milliseconds for s in stats])),
        )

    def as_row(self) -> tuple:
        return (
            self.delta_d / MM,
            math.degrees(self.delta_alpha),
            self.mean_edges,
            self.mean_cliques,
            self.mean_expansions,
            self.budget_exhausted,
            self.mean_clique_milliseconds,
        )


def run_pruning_study(
    scenes: Sequence[SyntheticScene],
    delta_alpha_values: Sequence[float],
    config: PipelineConfig = DEFAULT_CONFIG,
    runner: Optional[TrialRunner] = None,
) -> list[SweepRow]:
    """Graph and clique statistics per normal-angle threshold, rows in input order.

    Each scene's correspondences are computed once and shared by every threshold.
    """
    variants = [config.with_overrides(delta_alpha=a) for a in delta_alpha_values]
    return [SweepRow.aggregate(v, s) for v, s in zip(variants, _sweep(scenes, variants, runner))]


def run_threshold_sweep(
    scenes: Sequence[SyntheticScene],
    delta_d_values: Sequence[float],
    delta_alpha_values: Sequence[float],
    config: PipelineConfig = DEFAULT_CONFIG,
    runner: Optional[TrialRunner] = None,
) -> list[SweepRow]:
    """Distance-by-angle grid of clique statistics, distance-major."""
    variants = [
        config.with_overrides(delta_d=d, delta_alpha=a) for d in delta_d_values for a in delta_alpha_values
    ]
    return [SweepRow.aggregate(v, s) for v, s in zip(variants, _sweep(scenes, variants, runner))]


def reduction(before: float, after: float) -> float:
    """Fractional decrease from ``before`` to ``after``."""
    return 0.0 if before == 0 else (before - after) / before


# --- sliding sensitivity -------------------------------------------------------------


@dataclass(frozen=True)
class SensitivityRow:
    HEADER: ClassVar[tuple[str, ...]] = (
        "sliding_length_mm",
        "ee_trans_sigma_mm",
        "ee_rot_sigma_deg",
        "median_normalized_te",
        "median_re_deg",
        "success_rate",
        "trials",
    )

    sliding_length: float
    noise: NoiseSpec
    median_normalized_te: float
    median_re: float  # degrees
    success_rate: float
    trials: int

    def as_row(self) -> tuple:
        return (
            self.sliding_length / MM,
            self.noise.ee_trans_sigma / MM,
            math.degrees(self.noise.ee_rot_sigma),
            self.median_normalized_te,
            self.median_re,
            self.success_rate,
            self.trials,
        )


def _sliding_trial(
    seed: int, *, mesh: TriangleMesh, sliding_length: float, noise: NoiseSpec, config: PipelineConfig
) -> RegistrationMetrics:
    try:
        scene = generate_sliding_scene(mesh, sliding_length, noise, seed, config)
        result = register(scene.source, scene.target, config)
    except GeometryError as exc:
        logger.info("sliding trial seed %d on %s failed: %s", seed, mesh.name, exc)
        return _NO_ESTIMATE
    return evaluate(scene.gt, result.transform, result.failed, symmetries_of(mesh.name), timings=result.timings)


def run_sensitivity_study(
    mesh: TriangleMesh,
    sliding_lengths: Sequence[float],
    noise_levels: Sequence[NoiseSpec],
    trials: int,
    config: PipelineConfig = DEFAULT_CONFIG,
    seed: int = 0,
    runner: Optional[TrialRunner] = None,
) -> list[SensitivityRow]:
    """Registration accuracy per (sliding length, end-effector noise) cell, length-major.

    Translation error is normalized by the mesh's bounding-box diagonal. Every cell
    uses the seeds ``seed .. seed + trials - 1``.
    """
    if not sliding_lengths or not noise_levels:
        raise ValueError("sensitivity study needs at least one sliding length and one noise level")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    diagonal = mesh.diagonal
    seeds = range(seed, seed + trials)
    rows = []
    for length in sliding_lengths:
        for noise in noise_levels:
            trial = functools.partial(
                _sliding_trial, mesh=mesh, sliding_length=length, noise=noise, config=config
            )
            metrics = (runner or _SERIAL).run(trial, seeds)
            rows.append(
                SensitivityRow(
                    length,
                    noise,
                    float(np.median([m.te for m in metrics])) / diagonal,
                    float(np.median([m.re for m in metrics])),
                    float(np.mean([m.success for m in metrics])),
                    trials,
                )
            )
            logger.debug("sliding %.1f mm cell done: %s", length / MM, rows[-1])
    return rows


# --- per-stage profile ---------------------------------------------------------------


@dataclass(frozen=True)
class ProfileRow:
    HEADER: ClassVar[tuple[str, ...]] = ("stage", "mean_milliseconds", "share")

    stage: str
    mean_milliseconds: float
    share: float

    def as_row(self) -> tuple:
        return (self.stage, self.mean_milliseconds, self.share)


@dataclass(frozen=True)
class ProfileReport:
    rows: list[ProfileRow]  # pipeline order
    largest: list[str]  # the two slowest stages, slowest first
    trials: int


def _profile_scene(scene: SyntheticScene, *, config: PipelineConfig) -> StageTimings:
    return register(scene.source, scene.target, config).timings


def run_profile(
    scenes: Sequence[SyntheticScene],
    config: PipelineConfig = DEFAULT_CONFIG,
    runner: Optional[TrialRunner] = None,
) -> ProfileReport:
    """Mean wall-clock time per pipeline stage over ``scenes``."""
    if not scenes:
        raise ValueError("profile needs at least one scene")
    timings = (runner or _SERIAL).map(functools.partial(_profile_scene, config=config), list(scenes))
    stages = [name for name, _ in timings[0].as_rows()]
    means = {name: float(np.mean([getattr(t, name) for t in timings])) for name in stages}
    total = sum(means.values())
    rows = [ProfileRow(name, means[name], means[name] / total if total > 0 else 0.0) for name in stages]
    return ProfileReport(rows, StageTimings(**means).largest(2), len(scenes))
