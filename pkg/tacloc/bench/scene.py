"""Synthetic registration scenes with known ground truth."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.transform import Rotation

from tacloc.bench.config import BENCH_SETTINGS, target_sample_count
from tacloc.core.config import DEFAULT_CONFIG, PipelineConfig
from tacloc.core.errors import GeometryError, PatchGrowthError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply
from tacloc.core.mesh import TriangleMesh
from tacloc.core.spatial import SpatialIndex
from tacloc.features.sampling import sample_faces
from tacloc.tactile.maps import TouchFrame
from tacloc.tactile.render import SensorSpec, render_touch
from tacloc.tactile.submap import build_submap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSpec:
    point_sigma: float = 0.0  # metres, per point
    ee_trans_sigma: float = 0.0  # metres, per touch frame
    ee_rot_sigma: float = 0.0  # radians, per touch frame

    def __post_init__(self) -> None:
        for name in ("point_sigma", "ee_trans_sigma", "ee_rot_sigma"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    target: OrientedPointCloud
    source: OrientedPointCloud
    gt: RigidTransform  # maps source coordinates into the target (model) frame
    patch_fraction: float
    noise: NoiseSpec
    seed: int
    mesh_name: str = ""
    n_frames: int = 1


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform on SO(3): normalized Gaussian quaternion."""
    q = rng.normal(size=4)
    return Rotation.from_quat(q / np.linalg.norm(q)).as_matrix()


def random_transform(rng: np.random.Generator, extent: float) -> RigidTransform:
    """Uniform rotation and a translation uniform in the cube ``[-extent, extent]^3``."""
    rotation = random_rotation(rng)
    return RigidTransform(rotation, rng.uniform(-extent, extent, size=3))


def grow_patch(mesh: TriangleMesh, seed_face: int, fraction: float) -> np.ndarray:
    """Faces nearest ``seed_face`` (geodesically, over shared-vertex adjacency) covering ``fraction`` of the area."""
    if not 0 < fraction <= 1:
        raise ValueError(f"patch_fraction must lie in (0, 1], got {fraction}")
    areas = mesh.face_areas
    wanted = fraction * areas.sum()
    adjacency = mesh.face_adjacency()
    centroids = mesh.face_centroids
    hop = np.linalg.norm(centroids[adjacency.row] - centroids[adjacency.col], axis=1) + 1e-12
    graph = coo_matrix((hop, (adjacency.row, adjacency.col)), shape=adjacency.shape).tocsr()
    distance = dijkstra(graph, directed=False, indices=seed_face)

    reachable = np.flatnonzero(np.isfinite(distance))
    component_area = areas[reachable].sum()
    if component_area < wanted * (1.0 - 1e-9):
        label = int(mesh.components()[seed_face])
        raise PatchGrowthError(
            f"component {label} of mesh {mesh.name or '<unnamed>'} holds {component_area:.6g} m^2, "
            f"less than the requested patch area {wanted:.6g} m^2"
        )
    order = reachable[np.lexsort((reachable, distance[reachable]))]
    covered = np.cumsum(areas[order])
    count = int(np.searchsorted(covered, wanted * (1.0 - 1e-9))) + 1
    return np.sort(order[:count])


def generate_scene(
    mesh: TriangleMesh,
    patch_fraction: float,
    noise: NoiseSpec,
    seed: int,
    target_samples: Optional[int] = None,
    density_factor: float = BENCH_SETTINGS.source_density_factor,
) -> SyntheticScene:
    """Model cloud plus a densely sampled, noisy, randomly moved surface patch.

    The model gets ``target_samples`` points, or ``BENCH_SETTINGS.target_density`` per
    unit area when that is None; the patch is ``density_factor`` times denser. The
    scene depends only on its arguments: the same seed reproduces it bit for bit.
    """
    rng = np.random.default_rng(seed)
    target_samples = target_sample_count(mesh.total_area, target_samples)
    all_faces = np.arange(len(mesh.faces))
    target = sample_faces(mesh, all_faces, target_samples, rng)

    areas = mesh.face_areas
    labels = mesh.components()
    component_area = np.bincount(labels, weights=areas)
    # seed faces only where the patch can grow to full size
    eligible = component_area[labels] >= patch_fraction * areas.sum() * (1.0 - 1e-9)
    if not eligible.any():
        largest = int(np.argmax(component_area))
        raise PatchGrowthError(
            f"no component of mesh {mesh.name or '<unnamed>'} can hold a {patch_fraction:g} patch; "
            f"the largest, component {largest}, covers {component_area[largest] / areas.sum():.3f} of the area"
        )
    weights = np.where(eligible, areas, 0.0)
    seed_face = int(rng.choice(len(areas), p=weights / weights.sum()))
    faces = grow_patch(mesh, seed_face, patch_fraction)
    share = areas[faces].sum() / areas.sum()
    n_source = max(3, math.ceil(density_factor * target_samples * share))
    patch = sample_faces(mesh, faces, n_source, rng)
    if noise.point_sigma > 0:
        patch = OrientedPointCloud(patch.points + rng.normal(0.0, noise.point_sigma, patch.points.shape), patch.normals)

    extent = float(np.max(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)))
    moved = random_transform(rng, extent)
    return SyntheticScene(
        target=target,
        source=apply(moved, patch),
        gt=moved.inverse(),
        patch_fraction=patch_fraction,
        noise=noise,
        seed=seed,
        mesh_name=mesh.name,
    )


def _tangent_frame(normal: np.ndarray, heading: np.ndarray) -> np.ndarray:
    x = heading - np.dot(heading, normal) * normal
    if np.linalg.norm(x) < 1e-9:
        x = np.cross(normal, [1.0, 0.0, 0.0] if abs(normal[0]) < 0.9 else [0.0, 1.0, 0.0])
    x /= np.linalg.norm(x)
    return np.column_stack([x, np.cross(normal, x), normal])


def _pose_noise(rng: np.random.Generator, noise: NoiseSpec) -> RigidTransform:
    return RigidTransform.exp(
        rng.normal(0.0, noise.ee_rot_sigma, 3) if noise.ee_rot_sigma > 0 else np.zeros(3),
        rng.normal(0.0, noise.ee_trans_sigma, 3) if noise.ee_trans_sigma > 0 else np.zeros(3),
    )


def generate_sliding_scene(
    mesh: TriangleMesh,
    sliding_length: float,
    noise: NoiseSpec,
    seed: int,
    config: PipelineConfig = DEFAULT_CONFIG,
    sensor: Optional[SensorSpec] = None,
    target_samples: Optional[int] = None,
    density_factor: float = BENCH_SETTINGS.source_density_factor,
) -> SyntheticScene:
    """A sliding touch: rendered frames along a surface path, merged with noisy end-effector poses.

    Frames are spaced half the shorter gel side apart. The sensor is mounted at the
    end effector (identity offset), so each frame's reported end-effector pose is its
    true gel pose perturbed by ``noise``. The submap is expressed in the first
    frame, so ``gt`` is the true pose of the first gel frame in the model frame.
    """
    if not sliding_length >= 0:
        raise ValueError(f"sliding_length must be >= 0, got {sliding_length}")
    sensor = sensor if sensor is not None else SensorSpec()
    rng = np.random.default_rng(seed)
    target_samples = target_sample_count(mesh.total_area, target_samples)
    all_faces = np.arange(len(mesh.faces))
    target = sample_faces(mesh, all_faces, target_samples, rng)
    dense = sample_faces(mesh, all_faces, int(density_factor * target_samples), rng)
    index = SpatialIndex(dense.points)

    width, height = sensor.footprint
    step = 0.5 * min(width, height)
    n_frames = int(sliding_length // step) + 1

    current = int(rng.integers(len(dense)))
    heading = rng.normal(size=3)
    frames: list[TouchFrame] = []
    first_gel_pose: Optional[RigidTransform] = None
    for _ in range(n_frames):
        center, normal = dense.points[current], dense.normals[current]
        axes = _tangent_frame(normal, heading)
        origin = center - 0.5 * width * axes[:, 0] - 0.5 * height * axes[:, 1]
        touch = render_touch(dense, RigidTransform(axes, origin), sensor)
        if first_gel_pose is None:
            first_gel_pose = touch.gel_pose
        reported = _pose_noise(rng, noise) @ touch.gel_pose
        frames.append(touch.frame(reported, config.contact_threshold))

        ahead = center + step * axes[:, 0]
        nxt, _ = index.nearest(ahead)
        heading = dense.points[nxt] - center
        if np.linalg.norm(heading) < 1e-12:
            heading = axes[:, 0]
        current = nxt

    submap = build_submap(frames, RigidTransform.identity(), config.voxel_size)
    logger.debug("sliding scene seed %d: %d frames, %d submap points", seed, n_frames, len(submap))
    coverage = min(1.0, len(submap) * config.voxel_size**2 / mesh.total_area)
    return SyntheticScene(
        target=target,
        source=submap,
        gt=first_gel_pose,
        patch_fraction=coverage,
        noise=noise,
        seed=seed,
        mesh_name=mesh.name,
        n_frames=n_frames,
    )


def point_to_surface_rms(cloud: OrientedPointCloud, dense_surface: OrientedPointCloud) -> float:
    """RMS distance from ``cloud`` to a dense sample of the surface."""
    if cloud.is_empty:
        raise GeometryError("cannot measure an empty cloud")
    _, dist = SpatialIndex(dense_surface.points).nearest_many(cloud.points)
    return float(np.sqrt(np.mean(dist**2)))
