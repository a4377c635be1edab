"""Accumulation of touch frames into a submap."""

from __future__ import annotations

from typing import Sequence

from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply, compose
from tacloc.features.downsample import voxel_downsample
from tacloc.tactile.maps import TouchFrame


def build_submap(
    frames: Sequence[TouchFrame], sensor_in_ee: RigidTransform, voxel_size: float
) -> OrientedPointCloud:
    """Merge touches into one voxel-downsampled cloud expressed in the first touch's sensor frame.

    Frame ``k`` contributes ``inv(S_0) * S_k * cloud_k`` with ``S_k = ee_pose_k * sensor_in_ee``,
    so a common change of base frame cancels out.
    """
    if not frames:
        raise GeometryError("cannot build a submap from zero touch frames")
    sensor_poses = [compose(frame.ee_pose, sensor_in_ee) for frame in frames]
    to_first = sensor_poses[0].inverse()
    merged = OrientedPointCloud.concatenate(
        apply(compose(to_first, pose), frame.cloud) for pose, frame in zip(sensor_poses, frames)
    )
    return voxel_downsample(merged, voxel_size)
