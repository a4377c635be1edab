"""Tests for height recovery, contact clouds, touch rendering and submaps."""

import math

import numpy as np
import pytest

from tacloc.core.config import MM
from tacloc.core.errors import FormatError, GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply
from tacloc.tactile.heightmap import (
    contact_mask_threshold,
    frame_from_gradients,
    frame_from_heightmap,
    heightmap_to_cloud,
)
from tacloc.tactile.maps import GradientMaps, HeightMap, TouchFrame
from tacloc.tactile.poisson import divergence, laplacian_residual, poisson_solve_dct
from tacloc.tactile.render import SensorSpec, render_touch
from tacloc.tactile.submap import build_submap

from tests.helpers import plane_cloud, random_transform

PITCH = 0.1 * MM


def test_zero_gradients_give_zero_height():
    g = GradientMaps(np.zeros((16, 20)), np.zeros((16, 20)), PITCH)
    np.testing.assert_array_equal(poisson_solve_dct(g).h, 0.0)


def test_constant_slope_gives_plane():
    c = 0.3
    g = GradientMaps(np.full((64, 64), c), np.zeros((64, 64)), PITCH)
    h = poisson_solve_dct(g)
    cols = np.arange(64) * PITCH
    expected = np.tile(c * (cols - cols.mean()), (64, 1))
    np.testing.assert_allclose(h.h, expected, atol=1e-12)
    assert laplacian_residual(h, g) < 1e-8 * max(c, 1.0)


def test_output_is_zero_mean(rng):
    g = GradientMaps(rng.normal(size=(12, 9)), rng.normal(size=(12, 9)), PITCH)
    assert poisson_solve_dct(g).h.mean() == pytest.approx(0.0, abs=1e-15)


def test_random_fields_satisfy_discrete_poisson(rng):
    for _ in range(10):
        rows, cols = rng.integers(2, 40, size=2)
        g = GradientMaps(rng.normal(size=(rows, cols)), rng.normal(size=(rows, cols)), PITCH)
        scale = max(np.max(np.abs(g.gx)), np.max(np.abs(g.gy)), 1.0)
        assert laplacian_residual(poisson_solve_dct(g), g) < 1e-8 * scale


def test_divergence_sums_to_zero(rng):
    gx, gy = rng.normal(size=(10, 7)), rng.normal(size=(10, 7))
    assert divergence(gx, gy).sum() == pytest.approx(0.0, abs=1e-12)


def test_analytic_sinusoid():
    rows, cols = 64, 64
    width, height = (cols - 1) * PITCH, (rows - 1) * PITCH
    y, x = np.meshgrid(np.arange(rows) * PITCH, np.arange(cols) * PITCH, indexing="ij")
    amplitude = 0.5 * MM
    truth = amplitude * np.sin(np.pi * x / width) * np.sin(np.pi * y / height)
    gx = amplitude * (np.pi / width) * np.cos(np.pi * x / width) * np.sin(np.pi * y / height)
    gy = amplitude * (np.pi / height) * np.sin(np.pi * x / width) * np.cos(np.pi * y / height)
    g = GradientMaps(gx, gy, PITCH)
    recovered = poisson_solve_dct(g)
    error = recovered.h - (truth - truth.mean())
    assert np.sqrt(np.mean(error**2)) < 1e-2 * amplitude
    assert laplacian_residual(recovered, g) < 1e-8 * max(np.max(np.abs(gx)), 1.0)


def test_degenerate_grid():
    with pytest.raises(GeometryError, match="at least 2x2"):
        poisson_solve_dct(GradientMaps(np.zeros((1, 5)), np.zeros((1, 5)), PITCH))


def test_shape_mismatch():
    with pytest.raises(GeometryError, match="identical shapes"):
        GradientMaps(np.zeros((3, 3)), np.zeros((3, 4)), PITCH)


def test_non_finite():
    grid = np.zeros((3, 3))
    grid[1, 1] = np.inf
    with pytest.raises(GeometryError, match="non-finite"):
        HeightMap(grid, PITCH)


def test_height_map_minimum_size():
    with pytest.raises(GeometryError, match="at least 2x2"):
        HeightMap(np.zeros((1, 4)), PITCH)


def test_finite_difference_gradients():
    y, x = np.meshgrid(np.arange(5) * PITCH, np.arange(6) * PITCH, indexing="ij")
    g = HeightMap(0.2 * x - 0.1 * y, PITCH).gradients()
    np.testing.assert_allclose(g.gx, 0.2)
    np.testing.assert_allclose(g.gy, -0.1)


def test_gradient_files_must_share_pitch(tmp_path):
    GradientMaps(np.zeros((2, 2)), np.zeros((2, 2)), PITCH).to_files(tmp_path / "gx", tmp_path / "gy")
    GradientMaps(np.zeros((2, 2)), np.zeros((2, 2)), 2 * PITCH).to_files(tmp_path / "gx2", tmp_path / "gy2")
    assert GradientMaps.from_files(tmp_path / "gx", tmp_path / "gy").pixel_pitch == pytest.approx(PITCH)
    with pytest.raises(FormatError, match="pixel pitch"):
        GradientMaps.from_files(tmp_path / "gx", tmp_path / "gy2")


def test_touch_frame_requires_points():
    with pytest.raises(GeometryError, match="empty cloud"):
        TouchFrame(OrientedPointCloud.empty(), RigidTransform.identity())


def test_flat_contact_has_vertical_normals():
    h = HeightMap(np.full((4, 5), 1.0 * MM), PITCH)
    g = GradientMaps(np.zeros((4, 5)), np.zeros((4, 5)), PITCH)
    cloud = heightmap_to_cloud(h, g, 0.1 * MM)
    assert len(cloud) == 20
    np.testing.assert_array_equal(cloud.normals, np.tile([0.0, 0.0, 1.0], (20, 1)))


def test_unit_slope_normal():
    gx = np.zeros((3, 3))
    gx[1, 2] = 1.0
    h = np.zeros((3, 3))
    h[1, 2] = 1.0 * MM
    cloud = heightmap_to_cloud(HeightMap(h, PITCH), GradientMaps(gx, np.zeros((3, 3)), PITCH), 0.0)
    assert len(cloud) == 1
    np.testing.assert_allclose(cloud.points, [[2 * PITCH, 1 * PITCH, 1.0 * MM]])
    np.testing.assert_allclose(cloud.normals, [[-1.0 / math.sqrt(2), 0.0, 1.0 / math.sqrt(2)]])


def test_point_count_matches_mask_and_normals_face_up(rng):
    h = HeightMap(rng.uniform(0.0, 1.0 * MM, size=(20, 30)), PITCH)
    g = GradientMaps(rng.normal(size=(20, 30)), rng.normal(size=(20, 30)), PITCH)
    threshold = contact_mask_threshold(h)
    cloud = heightmap_to_cloud(h, g, threshold)
    assert len(cloud) == int(np.count_nonzero(h.h > threshold))
    assert np.all(cloud.normals[:, 2] > 0)


def test_nothing_in_contact():
    h = HeightMap(np.zeros((3, 3)), PITCH)
    g = GradientMaps(np.zeros((3, 3)), np.zeros((3, 3)), PITCH)
    assert heightmap_to_cloud(h, g, 0.1 * MM).is_empty


def test_dimension_mismatch():
    h = HeightMap(np.zeros((3, 3)), PITCH)
    g = GradientMaps(np.zeros((3, 4)), np.zeros((3, 4)), PITCH)
    with pytest.raises(GeometryError, match="differ in shape"):
        heightmap_to_cloud(h, g, 0.0)


def test_frame_from_gradients_of_a_bump():
    y, x = np.meshgrid(np.arange(40) * PITCH, np.arange(40) * PITCH, indexing="ij")
    r2 = (x - 2 * MM) ** 2 + (y - 2 * MM) ** 2
    bump = 0.8 * MM * np.exp(-r2 / (2 * (0.6 * MM) ** 2))
    g = HeightMap(bump, PITCH).gradients()
    frame = frame_from_gradients(g, RigidTransform.identity())
    # the contact patch is the bump top, well inside the grid
    assert 0 < len(frame.cloud) < 40 * 40 // 2
    assert np.all(np.abs(frame.cloud.points[:, :2].mean(axis=0) - 2 * MM) < 0.2 * MM)


def test_frame_from_heightmap_keeps_pose(rng):
    pose = random_transform(rng)
    h = HeightMap(np.pad(np.full((4, 4), 1.0 * MM), 4), PITCH)
    frame = frame_from_heightmap(h, pose)
    assert len(frame.cloud) == 16
    assert frame.ee_pose is pose


def _curved_surface(radius: float = 20 * MM) -> OrientedPointCloud:
    xs, ys = np.meshgrid(np.arange(-60, 260) * 0.1 * MM, np.arange(-60, 180) * 0.1 * MM, indexing="ij")
    x, y = xs.ravel(), ys.ravel()
    z = -((x - 8 * MM) ** 2) / (2 * radius)
    normals = np.column_stack([(x - 8 * MM) / radius, np.zeros_like(x), np.ones_like(x)])
    return OrientedPointCloud.from_unnormalized(np.column_stack([x, y, z]), normals)


def test_flat_surface_reads_full_indentation():
    sensor = SensorSpec(rows=12, cols=16)
    surface = plane_cloud(n=40, spacing=0.2 * MM)
    touch = render_touch(surface, RigidTransform.from_translation([1 * MM, 1 * MM, 0.0]), sensor)
    np.testing.assert_allclose(touch.height.h, sensor.indentation, atol=1e-12)
    np.testing.assert_allclose(touch.gradients.gx, 0.0, atol=1e-12)
    frame = touch.frame(RigidTransform.identity(), 0.1 * MM)
    on_surface = apply(touch.gel_pose, frame.cloud)
    np.testing.assert_allclose(on_surface.points[:, 2], 0.0, atol=1e-12)


def test_curved_contact_lies_on_surface():
    sensor = SensorSpec()
    radius = 20 * MM
    touch = render_touch(_curved_surface(radius), RigidTransform.identity(), sensor)
    frame = touch.frame(RigidTransform.identity(), 0.1 * MM)
    assert 0 < len(frame.cloud) < sensor.rows * sensor.cols
    moved = apply(touch.gel_pose, frame.cloud)
    x, z = moved.points[:, 0], moved.points[:, 2]
    np.testing.assert_allclose(z, -((x - 8 * MM) ** 2) / (2 * radius), atol=1e-5)
    expected = np.column_stack([(x - 8 * MM) / radius, np.zeros_like(x), np.ones_like(x)])
    expected /= np.linalg.norm(expected, axis=1, keepdims=True)
    np.testing.assert_allclose(moved.normals, expected, atol=1e-3)


def test_no_coverage():
    with pytest.raises(GeometryError, match="does not cover"):
        render_touch(plane_cloud(n=5), RigidTransform.from_translation([1.0, 1.0, 0.0]), SensorSpec())


def test_single_identity_frame():
    cloud = plane_cloud(n=6, spacing=2.0 * MM)
    submap = build_submap([TouchFrame(cloud, RigidTransform.identity())], RigidTransform.identity(), 1.0 * MM)
    np.testing.assert_allclose(submap.points, cloud.points)


def test_second_frame_offset_along_x():
    cloud = OrientedPointCloud([[0.5 * MM, 0.5 * MM, 0.0]], [[0.0, 0.0, 1.0]])
    frames = [
        TouchFrame(cloud, RigidTransform.identity()),
        TouchFrame(cloud, RigidTransform.from_translation([5 * MM, 0.0, 0.0])),
    ]
    submap = build_submap(frames, RigidTransform.identity(), 1.0 * MM)
    np.testing.assert_allclose(submap.points, [[0.5 * MM, 0.5 * MM, 0.0], [5.5 * MM, 0.5 * MM, 0.0]])


def test_common_base_change_cancels(rng):
    cloud = OrientedPointCloud.from_unnormalized(rng.normal(size=(30, 3)) * 0.01, rng.normal(size=(30, 3)))
    poses = [random_transform(rng) for _ in range(3)]
    sensor = random_transform(rng)
    shift = random_transform(rng)
    a = build_submap([TouchFrame(cloud, p) for p in poses], sensor, 1.0 * MM)
    b = build_submap([TouchFrame(cloud, shift @ p) for p in poses], sensor, 1.0 * MM)
    np.testing.assert_allclose(a.points, b.points, atol=1e-9)


def test_no_frames():
    with pytest.raises(GeometryError, match="zero touch frames"):
        build_submap([], RigidTransform.identity(), 1.0 * MM)
