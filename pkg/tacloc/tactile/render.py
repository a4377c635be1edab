"""Synthetic touches: what a flat gel sensor observes when pressed onto a surface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import Delaunay, QhullError

from tacloc.core.config import MM
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply
from tacloc.tactile.heightmap import heightmap_to_cloud
from tacloc.tactile.maps import GradientMaps, HeightMap, TouchFrame

# Points facing away from the gel by more than this are not visible to it.
_MIN_FACING = 0.1


@dataclass(frozen=True)
class SensorSpec:
    rows: int = 48
    cols: int = 64
    pixel_pitch: float = 0.25 * MM
    indentation: float = 1.5 * MM

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise GeometryError(f"sensor grid must be at least 2x2, got {self.rows}x{self.cols}")
        if not self.pixel_pitch > 0:
            raise GeometryError(f"pixel_pitch must be > 0, got {self.pixel_pitch}")
        if not self.indentation > 0:
            raise GeometryError(f"indentation must be > 0, got {self.indentation}")

    @property
    def footprint(self) -> tuple[float, float]:
        """Gel extent (width along x, height along y) in metres."""
        return (self.cols - 1) * self.pixel_pitch, (self.rows - 1) * self.pixel_pitch


@dataclass(frozen=True, eq=False)
class RenderedTouch:
    height: HeightMap
    gradients: GradientMaps
    gel_pose: RigidTransform  # pose of the height-map frame in the surface frame

    def frame(self, ee_pose: RigidTransform, contact_threshold: float) -> TouchFrame:
        return TouchFrame(heightmap_to_cloud(self.height, self.gradients, contact_threshold), ee_pose)


def _visible_layer(local: OrientedPointCloud, pitch: float, tolerance: float) -> np.ndarray:
    """Mask of points on the surface layer nearest the gel in each pixel cell."""
    cells = np.floor(local.points[:, :2] / pitch).astype(np.int64)
    _, cell_of = np.unique(cells, axis=0, return_inverse=True)
    cell_of = cell_of.reshape(-1)
    top = np.full(cell_of.max() + 1, -np.inf)
    np.maximum.at(top, cell_of, local.points[:, 2])
    return local.points[:, 2] >= top[cell_of] - tolerance


def render_touch(surface: OrientedPointCloud, sensor_pose: RigidTransform, sensor: SensorSpec) -> RenderedTouch:
    """Height and slope maps of ``surface`` seen from a gel at ``sensor_pose``.

    The sensor frame has its grid corner at the origin, pixel columns along +x, rows
    along +y, and +z pointing from the surface toward the gel. The surface is pressed
    ``sensor.indentation`` into the gel at its highest point under the footprint;
    everything below that depth reads as undeformed background (height 0).
    """
    pitch = sensor.pixel_pitch
    width, height = sensor.footprint
    local = apply(sensor_pose.inverse(), surface)
    margin = 2.0 * pitch
    xy = local.points[:, :2]
    near = (
        (local.normals[:, 2] > _MIN_FACING)
        & (xy[:, 0] >= -margin)
        & (xy[:, 0] <= width + margin)
        & (xy[:, 1] >= -margin)
        & (xy[:, 1] <= height + margin)
    )
    if near.sum() < 3:
        raise GeometryError("sensor footprint does not cover any visible surface")
    local = local.subset(np.flatnonzero(near))
    local = local.subset(np.flatnonzero(_visible_layer(local, pitch, 2.0 * sensor.indentation)))

    grid_x, grid_y = np.meshgrid(np.arange(sensor.cols) * pitch, np.arange(sensor.rows) * pitch)
    values = np.column_stack(
        [local.points[:, 2], -local.normals[:, 0] / local.normals[:, 2], -local.normals[:, 1] / local.normals[:, 2]]
    )
    try:
        triangulation = Delaunay(local.points[:, :2])
    except QhullError as exc:
        raise GeometryError(f"visible surface under the sensor is degenerate: {exc}") from exc
    sampled = LinearNDInterpolator(triangulation, values)(grid_x, grid_y)
    z, slope_x, slope_y = sampled[..., 0], sampled[..., 1], sampled[..., 2]
    if np.all(np.isnan(z)):
        raise GeometryError("sensor footprint does not cover any visible surface")

    base = float(np.nanmax(z)) - sensor.indentation
    heights = np.nan_to_num(z - base, nan=0.0)
    contact = heights > 0
    heights = np.where(contact, heights, 0.0)
    gx = np.where(contact, np.nan_to_num(slope_x), 0.0)
    gy = np.where(contact, np.nan_to_num(slope_y), 0.0)

    gel_pose = sensor_pose @ RigidTransform.from_translation([0.0, 0.0, base])
    return RenderedTouch(HeightMap(heights, pitch), GradientMaps(gx, gy, pitch), gel_pose)
