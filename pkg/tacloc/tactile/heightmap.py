"""Height map to oriented point cloud conversion and touch-frame construction."""

from __future__ import annotations

import logging

import numpy as np

from tacloc.core.config import MM
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.tactile.maps import GradientMaps, HeightMap, TouchFrame
from tacloc.tactile.poisson import poisson_solve_dct

logger = logging.getLogger(__name__)

DEFAULT_CONTACT_OFFSET = 0.1 * MM


def heightmap_to_cloud(h: HeightMap, g: GradientMaps, contact_threshold: float) -> OrientedPointCloud:
    """Points ``(u * pitch, v * pitch, h)`` with normals ``(-gx, -gy, 1)`` for pixels above threshold.

    ``u`` is the column index and ``v`` the row index.
    """
    if h.shape != g.shape:
        raise GeometryError(f"height map {h.shape} and gradients {g.shape} differ in shape")
    rows, cols = np.nonzero(h.h > contact_threshold)
    if len(rows) == 0:
        return OrientedPointCloud.empty()
    points = np.column_stack(
        [cols * h.pixel_pitch, rows * h.pixel_pitch, h.h[rows, cols]]
    ).astype(np.float64)
    normals = np.column_stack([-g.gx[rows, cols], -g.gy[rows, cols], np.ones(len(rows))])
    return OrientedPointCloud.from_unnormalized(points, normals)


def contact_mask_threshold(h: HeightMap, offset: float = DEFAULT_CONTACT_OFFSET) -> float:
    """Per-frame background level (median height) plus ``offset``."""
    return float(np.median(h.h)) + offset


def frame_from_heightmap(
    h: HeightMap,
    ee_pose: RigidTransform,
    contact_offset: float = DEFAULT_CONTACT_OFFSET,
    gradients: GradientMaps | None = None,
) -> TouchFrame:
    """Touch frame from a height map; slopes come from finite differences unless given."""
    g = gradients if gradients is not None else h.gradients()
    threshold = contact_mask_threshold(h, contact_offset)
    cloud = heightmap_to_cloud(h, g, threshold)
    logger.debug("touch frame: %d of %d pixels in contact", len(cloud), h.h.size)
    return TouchFrame(cloud, ee_pose)


def frame_from_gradients(
    g: GradientMaps,
    ee_pose: RigidTransform,
    contact_offset: float = DEFAULT_CONTACT_OFFSET,
) -> TouchFrame:
    """Integrate the gradient maps, mask contact pixels and build a touch frame."""
    return frame_from_heightmap(poisson_solve_dct(g), ee_pose, contact_offset, gradients=g)
