"""Tactile image-space containers.

Grids are stored as (rows, cols) arrays: rows follow the sensor's y axis and columns
its x axis, so ``gx`` is the slope along columns and ``gy`` the slope along rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from tacloc.core.config import MM
from tacloc.core.errors import FormatError, GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.core.io import read_grid, write_grid


def _grid(values: npt.ArrayLike, name: str) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    if out.ndim != 2 or out.size == 0:
        raise GeometryError(f"{name} must be a non-empty 2D grid, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise GeometryError(f"{name} contains non-finite values")
    out.setflags(write=False)
    return out


def _check_pitch(pixel_pitch: float) -> None:
    if not pixel_pitch > 0:
        raise GeometryError(f"pixel_pitch must be > 0, got {pixel_pitch}")


@dataclass(frozen=True, eq=False)
class GradientMaps:
    """Surface slopes dH/dx and dH/dy (dimensionless) on a pixel grid."""

    gx: np.ndarray
    gy: np.ndarray
    pixel_pitch: float

    def __post_init__(self) -> None:
        gx = _grid(self.gx, "gx")
        gy = _grid(self.gy, "gy")
        if gx.shape != gy.shape:
            raise GeometryError(f"gx and gy must have identical shapes, got {gx.shape} and {gy.shape}")
        _check_pitch(self.pixel_pitch)
        object.__setattr__(self, "gx", gx)
        object.__setattr__(self, "gy", gy)

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape

    @classmethod
    def from_files(cls, gx_path: str | Path, gy_path: str | Path) -> GradientMaps:
        gx, pitch_x = read_grid(gx_path)
        gy, pitch_y = read_grid(gy_path)
        if not np.isclose(pitch_x, pitch_y, rtol=1e-12, atol=0.0):
            raise FormatError(f"gradient grids disagree on pixel pitch: {pitch_x / MM} vs {pitch_y / MM} mm")
        return cls(gx, gy, pitch_x)

    def to_files(self, gx_path: str | Path, gy_path: str | Path) -> None:
        write_grid(gx_path, self.gx, self.pixel_pitch)
        write_grid(gy_path, self.gy, self.pixel_pitch)


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Surface heights (metres) on a pixel grid."""

    h: np.ndarray
    pixel_pitch: float

    def __post_init__(self) -> None:
        h = _grid(self.h, "height map")
        if min(h.shape) < 2:
            raise GeometryError(f"height map must be at least 2x2, got {h.shape}")
        _check_pitch(self.pixel_pitch)
        object.__setattr__(self, "h", h)

    @property
    def shape(self) -> tuple[int, int]:
        return self.h.shape

    def gradients(self) -> GradientMaps:
        """Finite-difference slopes (central inside, one-sided at the border)."""
        d_rows, d_cols = np.gradient(self.h, self.pixel_pitch)
        return GradientMaps(d_cols, d_rows, self.pixel_pitch)

    @classmethod
    def from_file(cls, path: str | Path) -> HeightMap:
        """Height grid file with values in millimetres."""
        h, pitch = read_grid(path, value_scale=MM)
        return cls(h, pitch)

    def to_file(self, path: str | Path) -> None:
        write_grid(path, self.h, self.pixel_pitch, value_scale=MM)


@dataclass(frozen=True, eq=False)
class TouchFrame:
    """One touch: a cloud in the sensor frame and the end-effector pose in the base frame."""

    cloud: OrientedPointCloud
    ee_pose: RigidTransform

    def __post_init__(self) -> None:
        if self.cloud.is_empty:
            raise GeometryError("touch frame has an empty cloud (no pixel in contact)")
