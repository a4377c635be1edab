"""Synthetic benchmarks: procedural meshes, scenes, metrics, baselines and studies."""

from tacloc.bench.config import BENCH_SETTINGS, BenchSettings, resolve_n_workers, target_sample_count
from tacloc.bench.metrics import (
    RecallPoint,
    RegistrationMetrics,
    evaluate,
    recall_curve,
    rotation_error,
    score_against_orbit,
    translation_error,
)
from tacloc.bench.ransac import RansacResult, ransac_baseline
from tacloc.bench.runner import TrialRunner
from tacloc.bench.scene import (
    NoiseSpec,
    SyntheticScene,
    generate_scene,
    generate_sliding_scene,
    grow_patch,
    point_to_surface_rms,
)
from tacloc.bench.shapes import FEATURE_RICH, MESH_SUITE, STRUCTURED, build_mesh, symmetries_of
from tacloc.bench.studies import (
    ProfileReport,
    ProfileRow,
    RecallRow,
    SensitivityRow,
    SweepRow,
    TrialRecord,
    generate_scenes,
    recall_table,
    run_profile,
    run_pruning_study,
    run_recall_benchmark,
    run_sensitivity_study,
    run_threshold_sweep,
    success_rates,
)

__all__ = [
    "BENCH_SETTINGS",
    "BenchSettings",
    "FEATURE_RICH",
    "MESH_SUITE",
    "NoiseSpec",
    "ProfileReport",
    "ProfileRow",
    "RansacResult",
    "RecallPoint",
    "RecallRow",
    "RegistrationMetrics",
    "STRUCTURED",
    "SensitivityRow",
    "SweepRow",
    "SyntheticScene",
    "TrialRecord",
    "TrialRunner",
    "build_mesh",
    "evaluate",
    "generate_scene",
    "generate_scenes",
    "generate_sliding_scene",
    "grow_patch",
    "point_to_surface_rms",
    "ransac_baseline",
    "recall_curve",
    "recall_table",
    "resolve_n_workers",
    "rotation_error",
    "run_profile",
    "run_pruning_study",
    "run_recall_benchmark",
    "run_sensitivity_study",
    "run_threshold_sweep",
    "score_against_orbit",
    "success_rates",
    "symmetries_of",
    "target_sample_count",
    "translation_error",
]
