"""Tests for pipeline and benchmark configuration."""

import math

import pytest

from tacloc.bench.config import BENCH_SETTINGS, resolve_n_workers
from tacloc.core.config import DEFAULT_CONFIG, MM, PipelineConfig
from tacloc.core.errors import ConfigError


def test_defaults_match_parameter_table():
    assert DEFAULT_CONFIG.voxel_size == pytest.approx(1.0 * MM)
    assert DEFAULT_CONFIG.fpfh_radius == pytest.approx(5.0 * MM)
    assert DEFAULT_CONFIG.delta_d == pytest.approx(6.0 * MM)
    assert DEFAULT_CONFIG.delta_alpha == pytest.approx(math.radians(30.0))
    assert DEFAULT_CONFIG.num_candidates == 300
    assert DEFAULT_CONFIG.alpha_weight == 1.0
    assert DEFAULT_CONFIG.num_initial_correspondences == 500


def test_voxel_derived_radii():
    assert DEFAULT_CONFIG.iss_salient_radius == pytest.approx(3.0 * MM)
    assert DEFAULT_CONFIG.iss_nms_radius == pytest.approx(1.5 * MM)
    assert DEFAULT_CONFIG.fallback_spacing == pytest.approx(3.0 * MM)
    assert DEFAULT_CONFIG.verification_gate == pytest.approx(18.0 * MM)


def test_overrides_rescale_derived_radii():
    cfg = DEFAULT_CONFIG.with_overrides(voxel_size=2.0 * MM, fpfh_radius=10.0 * MM)
    assert cfg.iss_salient_radius == pytest.approx(6.0 * MM)
    assert cfg.inlier_distance == pytest.approx(4.0 * MM)


def test_rejection_thresholds():
    assert DEFAULT_CONFIG.ambiguity_ratio == 2.0
    assert DEFAULT_CONFIG.ambiguity_distance == pytest.approx(2.0 * MM)
    assert DEFAULT_CONFIG.ambiguity_residual_floor == pytest.approx((0.1 * MM) ** 2)
    assert DEFAULT_CONFIG.min_constraint_ratio == pytest.approx(1e-3)
    assert DEFAULT_CONFIG.with_overrides(voxel_size=0.5 * MM).ambiguity_distance == pytest.approx(1.0 * MM)


def test_reject_ambiguity_ratio_below_one():
    with pytest.raises(ConfigError, match="ambiguity_ratio must be 0"):
        PipelineConfig(ambiguity_ratio=0.5)
    assert PipelineConfig(ambiguity_ratio=0.0).ambiguity_ratio == 0.0


def test_reject_constraint_ratio_of_one():
    with pytest.raises(ConfigError, match="min_constraint_ratio"):
        PipelineConfig(min_constraint_ratio=1.0)


def test_rejection_keys_in_files():
    cfg = PipelineConfig.from_text("ambiguity_distance = 3\nambiguity_ratio = 0\nmin_constraint_ratio = 0.01\n")
    assert cfg.ambiguity_distance == pytest.approx(3.0 * MM)
    assert cfg.ambiguity_ratio == 0.0
    assert cfg.min_constraint_ratio == pytest.approx(0.01)


def test_reject_nonpositive_voxel():
    with pytest.raises(ConfigError, match="voxel_size must be > 0"):
        PipelineConfig(voxel_size=0.0)


def test_reject_fpfh_radius_below_voxel():
    with pytest.raises(ConfigError, match="fpfh_radius must exceed voxel_size"):
        PipelineConfig(voxel_size=2 * MM, fpfh_radius=1 * MM)


def test_reject_delta_alpha_above_half_turn():
    with pytest.raises(ConfigError, match="delta_alpha"):
        PipelineConfig(delta_alpha=math.radians(181.0))


def test_half_turn_allowed():
    assert PipelineConfig(delta_alpha=math.pi).delta_alpha == math.pi


def test_reject_zero_candidates():
    with pytest.raises(ConfigError, match="num_candidates must be >= 1"):
        PipelineConfig(num_candidates=0)


def test_config_error_is_value_error():
    with pytest.raises(ValueError):
        PipelineConfig(alpha_weight=-1.0)


def test_units_are_converted():
    cfg = PipelineConfig.from_text(
        """
        # table values
        voxel_size = 0.5
        fpfh_radius = 2.5   # mm
        delta_alpha = 90
        num_candidates = 50
        """
    )
    assert cfg.voxel_size == pytest.approx(0.5 * MM)
    assert cfg.fpfh_radius == pytest.approx(2.5 * MM)
    assert cfg.delta_alpha == pytest.approx(math.pi / 2)
    assert cfg.num_candidates == 50


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown configuration key: 'voxel'"):
        PipelineConfig.from_text("voxel = 1\n")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="line 2: duplicate key 'delta_d'"):
        PipelineConfig.from_text("delta_d = 6\ndelta_d = 7\n")


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 1: expected 'key = value'"):
        PipelineConfig.from_text("delta_d 6\n")


def test_non_numeric_value():
    with pytest.raises(ConfigError, match="invalid value for 'num_candidates'"):
        PipelineConfig.from_text("num_candidates = many\n")


def test_text_round_trip():
    cfg = DEFAULT_CONFIG.with_overrides(delta_d=4 * MM, delta_alpha=math.radians(15))
    again = PipelineConfig.from_text(cfg.to_text())
    for name, value in vars(cfg).items():
        assert getattr(again, name) == pytest.approx(value, rel=1e-12), name


def test_from_file(tmp_path):
    path = tmp_path / "tacloc.cfg"
    path.write_text("delta_d = 12\n")
    assert PipelineConfig.from_file(path).delta_d == pytest.approx(12 * MM)


def test_success_criterion():
    assert BENCH_SETTINGS.success_rotation == pytest.approx(math.radians(5.0))
    assert BENCH_SETTINGS.success_translation == pytest.approx(5.0 * MM)


def test_recall_thresholds_increase():
    for thresholds in (BENCH_SETTINGS.recall_rotation_thresholds, BENCH_SETTINGS.recall_translation_thresholds):
        assert list(thresholds) == sorted(thresholds)


def test_threads_flag_wins(monkeypatch):
    monkeypatch.setenv("N_WORKERS", "6")
    assert resolve_n_workers(2) == 2


def test_environment_variable(monkeypatch):
    monkeypatch.setenv("N_WORKERS", "3")
    assert resolve_n_workers() == 3


def test_reject_zero_threads():
    with pytest.raises(ValueError, match="threads must be >= 1"):
        resolve_n_workers(0)
