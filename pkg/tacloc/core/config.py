"""Pipeline configuration.

Values are held in SI units (metres, radians). Configuration files are written in
millimetres and degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

from tacloc.core.errors import ConfigError

MM = 1e-3

# key -> unit kind used by the file format
_LENGTH_KEYS = {
    "voxel_size",
    "fpfh_radius",
    "delta_d",
    "refine_tol",
    "iss_salient_radius",
    "iss_nms_radius",
    "fallback_spacing",
    "inlier_distance",
    "contact_threshold",
    "ambiguity_distance",
}
_ANGLE_KEYS = {"delta_alpha"}
_INT_KEYS = {
    "num_candidates",
    "num_initial_correspondences",
    "refine_max_iters",
    "iss_min_neighbors",
    "min_keypoints",
    "max_cliques",
    "clique_budget",
    "ransac_iterations",
    "seed",
}
_FLOAT_KEYS = {
    "alpha_weight",
    "iss_gamma21",
    "iss_gamma32",
    "verification_gate_factor",
    "min_inlier_fraction",
    "ambiguity_ratio",
    "min_constraint_ratio",
}
_VOXEL_DERIVED = (
    "iss_salient_radius",
    "iss_nms_radius",
    "fallback_spacing",
    "inlier_distance",
    "ambiguity_distance",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters of the registration pipeline (SI units)."""

    voxel_size: float = 1.0 * MM
    fpfh_radius: float = 5.0 * MM
    delta_d: float = 6.0 * MM
    delta_alpha: float = math.radians(30.0)
    num_candidates: int = 300
    alpha_weight: float = 1.0
    num_initial_correspondences: int = 500
    refine_max_iters: int = 30
    refine_tol: float = 1e-5
    # ISS keypoints; radii default to multiples of voxel_size
    iss_salient_radius: Optional[float] = None
    iss_nms_radius: Optional[float] = None
    iss_gamma21: float = 0.975
    iss_gamma32: float = 0.975
    iss_min_neighbors: int = 5
    min_keypoints: int = 10
    fallback_spacing: Optional[float] = None
    # clique search
    max_cliques: int = 3000
    clique_budget: int = 1_000_000
    # verification
    verification_gate_factor: float = 3.0
    inlier_distance: Optional[float] = None
    min_inlier_fraction: float = 0.3
    # a distinct pose within ambiguity_ratio of the best residual fails the registration
    ambiguity_ratio: float = 2.0
    ambiguity_distance: Optional[float] = None
    # poses that some motion leaves unpinned fail the registration
    min_constraint_ratio: float = 1e-3
    # tactile front end
    contact_threshold: float = 0.1 * MM
    # baseline
    ransac_iterations: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        derived = {
            "iss_salient_radius": 3.0 * self.voxel_size,
            "iss_nms_radius": 1.5 * self.voxel_size,
            "fallback_spacing": 3.0 * self.voxel_size,
            "inlier_distance": 2.0 * self.voxel_size,
            "ambiguity_distance": 2.0 * self.voxel_size,
        }
        for name, value in derived.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        self._validate()

    def _validate(self) -> None:
        if not self.voxel_size > 0:
            raise ConfigError(f"voxel_size must be > 0, got {self.voxel_size}")
        if not self.fpfh_radius > self.voxel_size:
            raise ConfigError(
                f"fpfh_radius must exceed voxel_size, got {self.fpfh_radius} <= {self.voxel_size}"
            )
        if not self.delta_d > 0:
            raise ConfigError(f"delta_d must be > 0, got {self.delta_d}")
        if not 0 < self.delta_alpha <= math.pi:
            raise ConfigError(
                f"delta_alpha must lie in (0, 180] degrees, got {math.degrees(self.delta_alpha)}"
            )
        if self.num_candidates < 1:
            raise ConfigError(f"num_candidates must be >= 1, got {self.num_candidates}")
        if self.alpha_weight < 0:
            raise ConfigError(f"alpha_weight must be >= 0, got {self.alpha_weight}")
        for name in ("num_initial_correspondences", "refine_max_iters", "max_cliques", "clique_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.refine_tol > 0:
            raise ConfigError(f"refine_tol must be > 0, got {self.refine_tol}")
        for name in ("iss_gamma21", "iss_gamma32"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        for name in _VOXEL_DERIVED:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 <= self.min_inlier_fraction <= 1:
            raise ConfigError(f"min_inlier_fraction must lie in [0, 1], got {self.min_inlier_fraction}")
        if not 0 <= self.min_constraint_ratio < 1:
            raise ConfigError(f"min_constraint_ratio must lie in [0, 1), got {self.min_constraint_ratio}")
        if not (self.ambiguity_ratio == 0 or self.ambiguity_ratio >= 1):
            raise ConfigError(f"ambiguity_ratio must be 0 (off) or >= 1, got {self.ambiguity_ratio}")
        if self.ransac_iterations < 1:
            raise ConfigError(f"ransac_iterations must be >= 1, got {self.ransac_iterations}")

    @property
    def verification_gate(self) -> float:
        """Association cut-off used during refinement."""
        return self.verification_gate_factor * self.delta_d

    @property
    def ambiguity_residual_floor(self) -> float:
        """Absolute slack (m^2) added to the rival residual bound; a tenth of a voxel, squared."""
        return (0.1 * self.voxel_size) ** 2

    def with_overrides(self, **overrides: Any) -> PipelineConfig:
        """Copy with some fields replaced; voxel-derived radii follow a new voxel size."""
        if "voxel_size" in overrides:
            for name in _VOXEL_DERIVED:
                overrides.setdefault(name, None)
        return replace(self, **overrides)

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> PipelineConfig:
        """Parse file-unit strings (mm, degrees) into a config."""
        known = {f.name for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown configuration key: {key!r}")
            try:
                if key in _INT_KEYS:
                    kwargs[key] = int(raw)
                elif key in _LENGTH_KEYS:
                    kwargs[key] = float(raw) * MM
                elif key in _ANGLE_KEYS:
                    kwargs[key] = math.radians(float(raw))
                elif key in _FLOAT_KEYS:
                    kwargs[key] = float(raw)
                else:  # pragma: no cover - every field is classified above
                    raise ConfigError(f"unclassified configuration key: {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"invalid value for {key!r}: {raw!r}") from exc
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> PipelineConfig:
        values: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            if "=" not in content:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
            key, value = (part.strip() for part in content.split("=", 1))
            if not key or not value:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = value
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        """Serialize in file units; ``from_text(to_text())`` reproduces the config."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in _LENGTH_KEYS:
                lines.append(f"{f.name} = {value / MM!r}")
            elif f.name in _ANGLE_KEYS:
                lines.append(f"{f.name} = {math.degrees(value)!r}")
            else:
                lines.append(f"{f.name} = {value!r}")
        return "\n".join(lines) + "\n"


DEFAULT_CONFIG = PipelineConfig()
