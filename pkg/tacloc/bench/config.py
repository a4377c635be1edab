"""Shared settings for benchmark studies and the worker pool."""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass

from tacloc.core.config import MM


@dataclass(frozen=True)
class BenchSettings:
    n_trials: int
    patch_fraction: float
    target_density: float  # model samples per square metre of surface
    # source sampling density relative to the target's
    source_density_factor: float
    success_rotation: float  # radians
    success_translation: float  # metres
    recall_rotation_thresholds: tuple[float, ...]  # radians
    recall_translation_thresholds: tuple[float, ...]  # metres
    pruning_delta_alpha: tuple[float, ...]  # radians
    sweep_delta_d: tuple[float, ...]  # metres
    sweep_delta_alpha: tuple[float, ...]  # radians
    sliding_lengths: tuple[float, ...]  # metres
    sliding_noise: tuple[tuple[float, float], ...]  # (ee translation sigma m, ee rotation sigma rad)


BENCH_SETTINGS = BenchSettings(
    n_trials=10,
    patch_fraction=0.1,
    target_density=8.0 / MM**2,
    source_density_factor=10.0,
    success_rotation=math.radians(5.0),
    success_translation=5.0 * MM,
    recall_rotation_thresholds=tuple(math.radians(d) for d in (1, 2, 3, 5, 7.5, 10, 15, 20)),
    recall_translation_thresholds=tuple(mm * MM for mm in (1, 2, 3, 5, 7.5, 10, 15, 20)),
    pruning_delta_alpha=(math.radians(180.0), math.radians(30.0)),
    sweep_delta_d=tuple(mm * MM for mm in (2, 6, 12, 24)),
    sweep_delta_alpha=tuple(math.radians(d) for d in (15, 30, 90, 180)),
    sliding_lengths=tuple(mm * MM for mm in (10, 25, 50)),
    sliding_noise=((0.0, 0.0), (0.5 * MM, math.radians(0.5)), (1.0 * MM, math.radians(1.0))),
)


def resolve_n_workers(threads: int | None = None) -> int:
    """Worker count from ``--threads``, the ``N_WORKERS`` environment variable, or CPU count."""
    if threads is not None:
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        return threads
    return int(os.environ.get("N_WORKERS", str(min(8, multiprocessing.cpu_count()))))


def target_sample_count(area: float, target_samples: int | None = None) -> int:
    """An explicit sample count, or enough samples for ``BENCH_SETTINGS.target_density`` over ``area``."""
    if target_samples is not None:
        if target_samples < 1:
            raise ValueError(f"target_samples must be >= 1, got {target_samples}")
        return target_samples
    return max(1, math.ceil(BENCH_SETTINGS.target_density * area))
