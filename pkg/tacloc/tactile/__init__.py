"""Tactile front end: gradient maps, height maps, touch frames and submaps."""

from tacloc.tactile.heightmap import (
    contact_mask_threshold,
    frame_from_gradients,
    frame_from_heightmap,
    heightmap_to_cloud,
)
from tacloc.tactile.maps import GradientMaps, HeightMap, TouchFrame
from tacloc.tactile.poisson import laplacian_residual, poisson_solve_dct
from tacloc.tactile.render import RenderedTouch, SensorSpec, render_touch
from tacloc.tactile.submap import build_submap

__all__ = [
    "GradientMaps",
    "HeightMap",
    "RenderedTouch",
    "SensorSpec",
    "TouchFrame",
    "build_submap",
    "contact_mask_threshold",
    "frame_from_gradients",
    "frame_from_heightmap",
    "heightmap_to_cloud",
    "laplacian_residual",
    "poisson_solve_dct",
    "render_touch",
]
