"""Tests for transforms, oriented clouds, meshes and the spatial index."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from tacloc.core.config import MM
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply, compose
from tacloc.core.mesh import TriangleMesh
from tacloc.core.spatial import SpatialIndex, brute_force_nearest, nearest_neighbor

from tests.helpers import random_transform


def rz(degrees: float) -> RigidTransform:
    return RigidTransform(Rotation.from_euler("z", degrees, degrees=True).as_matrix())


def assert_transform_close(a: RigidTransform, b: RigidTransform, atol: float = 1e-9) -> None:
    np.testing.assert_allclose(a.as_matrix(), b.as_matrix(), atol=atol)


def test_identity_compose_identity():
    assert_transform_close(compose(RigidTransform.identity(), RigidTransform.identity()), RigidTransform.identity())


def test_compose_with_inverse_is_identity(rng):
    t = random_transform(rng)
    assert_transform_close(compose(t, t.inverse()), RigidTransform.identity())
    assert_transform_close(t.inverse() @ t, RigidTransform.identity())


def test_rotations_about_common_axis_add():
    assert_transform_close(compose(rz(30), rz(60)), rz(90))


def test_compose_matches_homogeneous_product(rng):
    a, b = random_transform(rng), random_transform(rng)
    np.testing.assert_allclose(compose(a, b).as_matrix(), a.as_matrix() @ b.as_matrix(), atol=1e-12)


def test_compose_is_associative(rng):
    for _ in range(20):
        a, b, c = (random_transform(rng) for _ in range(3))
        assert_transform_close((a @ b) @ c, a @ (b @ c))


def test_composition_keeps_orthonormality(rng):
    t = RigidTransform.identity()
    for _ in range(200):
        t = t @ random_transform(rng)
    np.testing.assert_allclose(t.rotation.T @ t.rotation, np.eye(3), atol=1e-9)
    assert np.linalg.det(t.rotation) == pytest.approx(1.0, abs=1e-9)


def test_small_drift_is_repaired():
    drifted = np.eye(3) + 1e-6 * np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    t = RigidTransform(drifted)
    np.testing.assert_allclose(t.rotation.T @ t.rotation, np.eye(3), atol=1e-12)


def test_reject_reflection():
    with pytest.raises(GeometryError, match="reflection"):
        RigidTransform(np.diag([1.0, 1.0, -1.0]))


def test_reject_non_orthonormal():
    with pytest.raises(GeometryError, match="not orthonormal"):
        RigidTransform(2.0 * np.eye(3))


def test_reject_non_finite():
    with pytest.raises(GeometryError, match="non-finite"):
        RigidTransform(np.eye(3), [0.0, np.nan, 0.0])


def test_from_matrix_requires_homogeneous_last_row():
    m = np.eye(4)
    m[3, 0] = 1.0
    with pytest.raises(GeometryError, match="last row"):
        RigidTransform.from_matrix(m)


def test_matrix_round_trip(rng):
    t = random_transform(rng)
    assert_transform_close(RigidTransform.from_matrix(t.as_matrix()), t, atol=0.0)


def test_exp_rotation_angle():
    t = RigidTransform.exp([0.0, 0.0, math.radians(40)], [0.0, 0.0, 0.0])
    assert math.degrees(t.rotation_angle()) == pytest.approx(40.0)


def test_arrays_are_read_only():
    t = RigidTransform.identity()
    with pytest.raises(ValueError):
        t.translation[0] = 1.0


def test_identity_leaves_cloud(rng):
    cloud = OrientedPointCloud.from_unnormalized(rng.normal(size=(10, 3)), rng.normal(size=(10, 3)))
    moved = apply(RigidTransform.identity(), cloud)
    np.testing.assert_array_equal(moved.points, cloud.points)
    np.testing.assert_array_equal(moved.normals, cloud.normals)


def test_translation_moves_points_only():
    cloud = OrientedPointCloud([[0.0, 0.0, 0.0]], [[0.0, 0.0, 1.0]])
    moved = apply(RigidTransform.from_translation([1.0, 2.0, 3.0]), cloud)
    np.testing.assert_allclose(moved.points, [[1.0, 2.0, 3.0]])
    np.testing.assert_allclose(moved.normals, [[0.0, 0.0, 1.0]])


def test_quarter_turn_rotates_points_and_normals():
    cloud = OrientedPointCloud([[1.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]])
    moved = apply(rz(90), cloud)
    np.testing.assert_allclose(moved.points, [[0.0, 1.0, 0.0]], atol=1e-12)
    np.testing.assert_allclose(moved.normals, [[0.0, 1.0, 0.0]], atol=1e-12)


def test_distances_and_unit_normals_preserved(rng):
    cloud = OrientedPointCloud.from_unnormalized(rng.normal(size=(50, 3)), rng.normal(size=(50, 3)))
    moved = apply(random_transform(rng), cloud)
    before = np.linalg.norm(cloud.points[:, None] - cloud.points[None], axis=-1)
    after = np.linalg.norm(moved.points[:, None] - moved.points[None], axis=-1)
    np.testing.assert_allclose(after, before, atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(moved.normals, axis=1), 1.0, atol=1e-6)


def test_apply_composition(rng):
    a, b = random_transform(rng), random_transform(rng)
    cloud = OrientedPointCloud.from_unnormalized(rng.normal(size=(20, 3)), rng.normal(size=(20, 3)))
    np.testing.assert_allclose(apply(a @ b, cloud).points, apply(a, apply(b, cloud)).points, atol=1e-9)


def test_reject_length_mismatch():
    with pytest.raises(GeometryError, match="equal length"):
        OrientedPointCloud(np.zeros((3, 3)), np.tile([0.0, 0.0, 1.0], (2, 1)))


def test_reject_non_unit_normal():
    with pytest.raises(GeometryError, match="unit length"):
        OrientedPointCloud([[0.0, 0.0, 0.0]], [[0.0, 0.0, 2.0]])


def test_from_unnormalized_rescales():
    cloud = OrientedPointCloud.from_unnormalized([[0.0, 0.0, 0.0]], [[0.0, 3.0, 4.0]])
    np.testing.assert_allclose(cloud.normals, [[0.0, 0.6, 0.8]])


def test_concatenate_and_subset():
    a = OrientedPointCloud([[0.0, 0.0, 0.0]], [[0.0, 0.0, 1.0]])
    b = OrientedPointCloud([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], [[0.0, 0.0, 1.0]] * 2)
    both = OrientedPointCloud.concatenate([a, b])
    assert len(both) == 3
    np.testing.assert_array_equal(both.subset([2]).points, [[2.0, 0.0, 0.0]])


def test_empty_cloud():
    empty = OrientedPointCloud.empty()
    assert empty.is_empty
    assert empty.bounding_box_diagonal() == 0.0
    with pytest.raises(GeometryError, match="empty"):
        empty.centroid()


def test_query_on_stored_point():
    index = SpatialIndex([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    assert index.nearest([1.0, 1.0, 1.0]) == (1, 0.0)


def test_two_point_example():
    index = SpatialIndex([[0.0, 0.0, 0.0], [10 * MM, 0.0, 0.0]])
    idx, dist = nearest_neighbor(index, [4 * MM, 0.0, 0.0])
    assert idx == 0
    assert dist == pytest.approx(4 * MM)


def test_ties_resolve_to_smallest_index():
    index = SpatialIndex([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert index.nearest([0.0, 0.0, 0.0])[0] == 0


def test_eight_way_ties_resolve_to_smallest_index(rng):
    # every cell centre of an integer lattice is equidistant from its eight corners
    lattice = np.stack(np.meshgrid(*[np.arange(5.0)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    points = lattice[rng.permutation(len(lattice))]
    index = SpatialIndex(points)
    centres = np.stack(np.meshgrid(*[np.arange(4.0) + 0.5] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    idx, _ = index.nearest_many(centres)
    expected = [brute_force_nearest(points, c)[0] for c in centres]
    np.testing.assert_array_equal(idx, expected)


def test_matches_exhaustive_scan(rng):
    points = rng.uniform(-1.0, 1.0, size=(1000, 3))
    index = SpatialIndex(points)
    queries = rng.uniform(-1.2, 1.2, size=(100, 3))
    idx, dist = index.nearest_many(queries)
    for q, i, d in zip(queries, idx, dist):
        expected_i, expected_d = brute_force_nearest(points, q)
        assert i == expected_i
        assert d == pytest.approx(expected_d)


def test_radius_is_sorted_and_inclusive():
    index = SpatialIndex([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(index.radius([0.0, 0.0, 0.0], 1.0), [0, 2])


def test_empty_cloud_rejected():
    with pytest.raises(GeometryError, match="empty"):
        SpatialIndex(np.zeros((0, 3)))


def test_unit_square_area_and_normal():
    mesh = TriangleMesh(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
        [[0, 1, 2], [0, 2, 3]],
    )
    assert mesh.total_area == pytest.approx(1.0)
    np.testing.assert_allclose(mesh.face_normals, [[0.0, 0.0, 1.0]] * 2)
    assert mesh.diagonal == pytest.approx(math.sqrt(2.0))


def test_components_of_disjoint_triangles():
    mesh = TriangleMesh(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 0, 0], [6, 0, 0], [5, 1, 0]],
        [[0, 1, 2], [3, 4, 5]],
    )
    labels = mesh.components()
    assert labels[0] != labels[1]


def test_reject_out_of_range_face():
    with pytest.raises(GeometryError, match="out of range"):
        TriangleMesh([[0.0, 0.0, 0.0]], [[0, 1, 2]])
