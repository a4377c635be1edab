"""Tests for pose estimation, refinement, hypothesis selection and the pipeline."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from tacloc.bench.metrics import evaluate, rotation_error, translation_error
from tacloc.bench.scene import NoiseSpec, generate_scene
from tacloc.bench.shapes import FEATURE_RICH, build_mesh, symmetries_of
from tacloc.bench.studies import generate_scenes
from tacloc.core.config import MM
from tacloc.core.errors import GeometryError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform, apply
from tacloc.features.downsample import voxel_downsample
from tacloc.features.sampling import sample_mesh
from tacloc.solver import refinement
from tacloc.solver.estimation import estimate_pose, estimate_rotation, estimate_translation
from tacloc.solver.pipeline import StageTimings, failure_reason, register
from tacloc.solver.refinement import STARVED_RESIDUAL, constraint_ratio, refine_point_to_plane
from tacloc.solver.verification import AmbiguityCheck, PoseHypothesis, verify_and_select, write_hypotheses

from tests.helpers import plane_cloud, random_transform


def unit_rows(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_recovers_exact_pose(rng):
    truth = random_transform(rng)
    p = rng.uniform(-0.02, 0.02, size=(8, 3))
    n = unit_rows(rng, 8)
    estimate = estimate_pose(p, truth.apply_points(p), n, truth.apply_directions(n), alpha=1.0)
    assert not estimate.degenerate
    np.testing.assert_allclose(estimate.transform.as_matrix(), truth.as_matrix(), atol=1e-9)


def test_points_alone_suffice_without_normals(rng):
    truth = random_transform(rng)
    p = rng.uniform(-0.02, 0.02, size=(5, 3))
    n = unit_rows(rng, 5)
    estimate = estimate_pose(p, truth.apply_points(p), n, n, alpha=0.0)
    np.testing.assert_allclose(estimate.transform.as_matrix(), truth.as_matrix(), atol=1e-9)


def test_matches_scipy_alignment(rng):
    p = rng.normal(size=(20, 3))
    q = p @ Rotation.from_rotvec([0.3, -0.2, 0.5]).as_matrix().T + 0.05 * rng.normal(size=(20, 3))
    zeros = np.zeros((20, 3))
    rotation, degenerate = estimate_rotation(p - p.mean(0), q - q.mean(0), zeros, zeros, 0.0)
    expected, _ = Rotation.align_vectors(q - q.mean(0), p - p.mean(0))
    assert not degenerate
    np.testing.assert_allclose(rotation, expected.as_matrix(), atol=1e-8)


def test_result_is_a_proper_rotation(rng):
    for _ in range(20):
        p, q = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        rotation, _ = estimate_rotation(p, q, unit_rows(rng, 6), unit_rows(rng, 6), 1.0)
        np.testing.assert_allclose(rotation.T @ rotation, np.eye(3), atol=1e-9)
        assert np.linalg.det(rotation) == pytest.approx(1.0)


def test_collinear_points_without_normals_are_degenerate():
    p = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]) * MM
    rotation, degenerate = estimate_rotation(p, p, np.zeros((3, 3)), np.zeros((3, 3)), 0.0)
    assert degenerate
    np.testing.assert_array_equal(rotation, np.eye(3))


def test_normals_resolve_collinear_points():
    p = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]) * MM
    normals = np.tile([0.0, 0.0, 1.0], (3, 1))
    _, degenerate = estimate_rotation(p, p, normals, normals, 1.0)
    assert not degenerate


def test_translation_is_mean_offset():
    p = np.zeros((2, 3))
    q = np.array([[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    np.testing.assert_allclose(estimate_translation(p, q, np.eye(3)), [2.0, 0.0, 0.0])


def test_pairs_must_match():
    with pytest.raises(GeometryError, match="pair up"):
        estimate_rotation(np.zeros((3, 3)), np.zeros((2, 3)), np.zeros((3, 3)), np.zeros((3, 3)), 1.0)
    with pytest.raises(GeometryError, match="zero pairs"):
        estimate_rotation(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3)), 1.0)


def test_exact_on_a_thousand_random_sets(rng):
    for _ in range(1000):
        truth = random_transform(rng)
        n_pairs = int(rng.integers(3, 30))
        p = rng.uniform(-0.02, 0.02, size=(n_pairs, 3))
        n = unit_rows(rng, n_pairs)
        estimate = estimate_pose(p, truth.apply_points(p), n, truth.apply_directions(n), alpha=1.0)
        assert np.linalg.norm(estimate.transform.rotation - truth.rotation) < 1e-9
        assert np.linalg.norm(estimate.transform.translation - truth.translation) < 1e-9


def _objective(rotations, p, q, n, m, alpha):
    """Sum of squared point and weighted normal misfits, one value per rotation."""
    point_misfit = q[None] - np.einsum("kij,nj->kni", rotations, p)
    normal_misfit = m[None] - np.einsum("kij,nj->kni", rotations, n)
    return np.sum(point_misfit**2, axis=(1, 2)) + alpha * np.sum(normal_misfit**2, axis=(1, 2))


def _grid_minimum(p, q, n, m, alpha, rng, step_deg=0.5):
    """Coarse random cover of SO(3), then a walk on a rotation-vector lattice of ``step_deg``."""
    coarse = Rotation.random(20_000, random_state=rng)
    centre = coarse[int(np.argmin(_objective(coarse.as_matrix(), p, q, n, m, alpha)))]
    offsets = np.stack(np.meshgrid(*[np.arange(-1, 2)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    offsets = Rotation.from_rotvec(np.radians(step_deg) * offsets)
    for _ in range(2000):
        around = offsets * centre
        scores = _objective(around.as_matrix(), p, q, n, m, alpha)
        best = int(np.argmin(scores))
        if best == len(offsets) // 2:
            break
        centre = around[best]
    return centre.as_matrix()


def test_two_collinear_pairs_match_a_grid_search(rng):
    # both points on a line through the origin: only the normals fix the spin about it
    p = np.array([[4.0, 0.0, 0.0], [-4.0, 0.0, 0.0]]) * MM
    n = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    truth = Rotation.from_rotvec([0.4, -0.9, 0.3]).as_matrix()
    q = p @ truth.T + rng.normal(0.0, 0.2 * MM, size=(2, 3))
    q -= q.mean(axis=0)
    m = n @ truth.T + rng.normal(0.0, 0.05, size=(2, 3))
    m /= np.linalg.norm(m, axis=1, keepdims=True)

    rotation, degenerate = estimate_rotation(p, q, n, m, 1.0)
    searched = _grid_minimum(p, q, n, m, 1.0, rng)
    assert not degenerate
    assert math.degrees(Rotation.from_matrix(searched.T @ rotation).magnitude()) < 0.5
    assert _objective(rotation[None], p, q, n, m, 1.0)[0] <= _objective(searched[None], p, q, n, m, 1.0)[0] + 1e-12


@pytest.fixture(scope="module")
def box_target(wedge_box_cloud):
    return voxel_downsample(wedge_box_cloud, 1.0 * MM)


@pytest.fixture(scope="module")
def corner_patch(box_target):
    corner = np.array([30.0, 20.0, -15.0]) * MM
    near = np.linalg.norm(box_target.points - corner, axis=1) < 18 * MM
    return box_target.subset(np.flatnonzero(near))


def test_recovers_a_small_offset(box_target, corner_patch, config):
    offset = RigidTransform.exp([0.0, math.radians(2.0), math.radians(1.0)], [1.0 * MM, -0.5 * MM, 0.5 * MM])
    source = apply(offset, corner_patch)
    result = refine_point_to_plane(RigidTransform.identity(), source, box_target, config)
    recovered = result.transform @ offset
    assert result.converged
    assert math.degrees(recovered.rotation_angle()) < 0.2
    assert np.linalg.norm(recovered.translation) < 0.2 * MM
    assert result.residual < 1e-9
    assert result.inlier_fraction == pytest.approx(1.0)


def test_refining_the_truth_stays_put(box_target, corner_patch, config):
    result = refine_point_to_plane(RigidTransform.identity(), corner_patch, box_target, config)
    assert result.residual < 1e-12
    assert result.transform.rotation_angle() < 1e-6


def test_starved_when_nothing_is_within_the_gate(box_target, corner_patch, config):
    far = RigidTransform.from_translation([1.0, 0.0, 0.0])
    result = refine_point_to_plane(far, corner_patch, box_target, config)
    assert result.residual == STARVED_RESIDUAL
    assert not result.converged
    assert result.n_associations == 0
    assert result.transform is far


def test_accepted_steps_never_raise_the_residual(box_target, corner_patch, config):
    offset = RigidTransform.exp([math.radians(3.0), 0.0, math.radians(-2.0)], [0.8 * MM, 0.4 * MM, -0.6 * MM])
    result = refine_point_to_plane(RigidTransform.identity(), apply(offset, corner_patch), box_target, config)
    assert len(result.steps) >= 2
    assert all(after <= before for before, after in result.steps)


def test_plane_on_plane_fixes_only_the_normal_offset(config):
    target = plane_cloud(40)
    patch = plane_cloud(10)
    source = OrientedPointCloud(patch.points + np.array([15.3, 15.0, 0.5]) * MM, patch.normals)
    result = refine_point_to_plane(RigidTransform.identity(), source, target, config)
    assert result.converged
    # the height is corrected; sliding within the plane changes nothing and is left alone
    np.testing.assert_allclose(result.transform.translation, [0.0, 0.0, -0.5 * MM], atol=1e-9)
    assert result.transform.rotation_angle() < 1e-6
    assert result.residual < 1e-18
    assert result.constraint < 1e-9


def test_rejected_step_halvings_stop_unconverged(box_target, corner_patch, config, monkeypatch):
    solve = refinement._linear_step
    monkeypatch.setattr(refinement, "_linear_step", lambda assoc: tuple(-v for v in solve(assoc)))
    initial = RigidTransform.identity()
    offset = RigidTransform.exp([0.0, math.radians(2.0), 0.0], [0.5 * MM, 0.0, 0.5 * MM])
    result = refine_point_to_plane(initial, apply(offset, corner_patch), box_target, config)
    assert not result.converged
    assert result.iterations == 1
    assert result.steps == ()
    assert result.transform is initial


def test_losing_associations_midway_returns_the_start(config, monkeypatch):
    monkeypatch.setattr(refinement, "_linear_step", lambda assoc: (np.zeros(3), np.array([1.0, 0.0, 0.0])))
    initial = RigidTransform.identity()
    patch = plane_cloud(10)
    source = OrientedPointCloud(patch.points + np.array([5.0, 5.0, 0.1]) * MM, patch.normals)
    result = refine_point_to_plane(initial, source, plane_cloud(20), config)
    assert result.transform is initial
    assert not result.converged
    assert result.residual == STARVED_RESIDUAL
    assert result.iterations == 1


def test_constraint_ratio(corner_patch, config, rng):
    plane = plane_cloud(10)
    assert constraint_ratio(plane.points, plane.normals) < 1e-12
    assert constraint_ratio(corner_patch.points, corner_patch.normals) > config.min_constraint_ratio
    radial = unit_rows(rng, 500)
    assert constraint_ratio(0.02 * radial, radial) < 1e-12
    assert constraint_ratio(np.zeros((0, 3)), np.zeros((0, 3))) == 0.0


def hypothesis(residual, clique_size=3, converged=True, clique_index=0):
    return PoseHypothesis.create(RigidTransform.identity(), residual, clique_size, converged, clique_index)


def test_weight_is_exponential_of_residual():
    assert hypothesis(0.5).weight == pytest.approx(math.exp(-0.5))
    assert hypothesis(0.0).weight == 1.0


def test_smallest_residual_wins():
    selection = verify_and_select([hypothesis(0.3, clique_index=0), hypothesis(0.1, clique_index=1)])
    assert selection.best.clique_index == 1
    assert not selection.failed


def test_ties_prefer_larger_clique_then_lower_index():
    a = hypothesis(0.1, clique_size=3, clique_index=0)
    b = hypothesis(0.1, clique_size=5, clique_index=1)
    c = hypothesis(0.1, clique_size=5, clique_index=2)
    assert verify_and_select([a, c, b]).best is b


def test_order_does_not_matter(rng):
    pool = [hypothesis(float(r), int(s), True, k) for k, (r, s) in enumerate(zip(rng.random(12), rng.integers(3, 9, 12)))]
    reference = verify_and_select(pool).best
    for _ in range(10):
        shuffled = [pool[i] for i in rng.permutation(len(pool))]
        assert verify_and_select(shuffled).best is reference


def test_mixture_weights_sum_to_one():
    selection = verify_and_select([hypothesis(0.1), hypothesis(2.0, clique_index=1)])
    assert selection.mixture_weights.sum() == pytest.approx(1.0)
    assert selection.mixture_weights[0] > selection.mixture_weights[1]


def test_unconverged_best_marks_failure():
    assert verify_and_select([hypothesis(0.1, converged=False)]).failed


def test_converged_hypothesis_outranks_a_lower_unconverged_residual():
    selection = verify_and_select([hypothesis(0.1, converged=False), hypothesis(0.2, clique_index=1)])
    assert not selection.failed
    assert selection.best.clique_index == 1
    assert [h.converged for h in selection.ranked] == [True, False]


def placed(residual, shift_mm, clique_index, converged=True, inlier_fraction=1.0, constraint=1.0):
    transform = RigidTransform.from_translation(np.asarray(shift_mm, dtype=float) * MM)
    return PoseHypothesis.create(
        transform, residual, 4, converged, clique_index, inlier_fraction, False, constraint
    )


@pytest.fixture
def touch_points(rng):
    return rng.uniform(-10 * MM, 10 * MM, size=(200, 3))


def test_distant_pose_with_similar_residual_is_a_rival(touch_points):
    check = AmbiguityCheck(touch_points, ratio=2.0, floor=0.0, distance=2 * MM)
    best, other = placed(1e-8, [0, 0, 0], 0), placed(1.5e-8, [10, 0, 0], 1)
    assert verify_and_select([other, best], check).rival is other


def test_nearby_or_worse_poses_are_not_rivals(touch_points):
    check = AmbiguityCheck(touch_points, ratio=2.0, floor=0.0, distance=2 * MM)
    best = placed(1e-8, [0, 0, 0], 0)
    assert verify_and_select([best, placed(1e-8, [0.5, 0, 0], 1)], check).rival is None
    assert verify_and_select([best, placed(3e-8, [10, 0, 0], 1)], check).rival is None
    assert verify_and_select([best, placed(1e-8, [10, 0, 0], 1, converged=False)], check).rival is None


def test_zero_ratio_disables_the_ambiguity_check(touch_points):
    check = AmbiguityCheck(touch_points, ratio=0.0, floor=1.0, distance=2 * MM)
    assert verify_and_select([placed(1e-8, [0, 0, 0], 0), placed(1e-8, [10, 0, 0], 1)], check).rival is None


def test_residual_floor_admits_rivals_of_a_perfect_fit(touch_points, config):
    check = AmbiguityCheck.from_config(touch_points, config)
    best, other = placed(0.0, [0, 0, 0], 0), placed(0.5 * config.ambiguity_residual_floor, [0, 10, 0], 1)
    assert verify_and_select([best, other], check).rival is other


def test_failure_reasons_in_order(touch_points, config):
    check = AmbiguityCheck.from_config(touch_points, config)

    def reason(*hypotheses):
        return failure_reason(verify_and_select(hypotheses, check), touch_points, config)

    assert reason(placed(1e-8, [0, 0, 0], 0, converged=False)) == "no hypothesis converged"
    assert reason(placed(1e-8, [0, 0, 0], 0, inlier_fraction=0.1)).startswith("inlier fraction 0.100")
    assert reason(placed(1e-8, [0, 0, 0], 0, constraint=1e-6)).startswith("unconstrained")
    ambiguous = reason(placed(1e-8, [0, 0, 0], 0), placed(1e-8, [0, 10, 0], 3))
    assert ambiguous.startswith("ambiguous: clique 3")
    assert ambiguous.endswith("10.0 mm away")
    assert reason(placed(1e-8, [0, 0, 0], 0), placed(1e-8, [0, 0.5, 0], 3)) == ""


def test_empty_input():
    with pytest.raises(GeometryError, match="at least one hypothesis"):
        verify_and_select([])


def test_reject_negative_residual():
    with pytest.raises(GeometryError, match="residual must be >= 0"):
        hypothesis(-1.0)


def test_hypotheses_file(tmp_path):
    path = tmp_path / "hyp.csv"
    write_hypotheses(path, verify_and_select([hypothesis(0.2), hypothesis(0.1, clique_index=1)]).ranked)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("rank,residual,weight,clique_size,converged,m00")
    assert len(lines) == 3
    assert lines[1].split(",")[1] == "0.1"


def test_measure_accumulates():
    timings = StageTimings()
    with timings.measure("graph"):
        pass
    with timings.measure("graph"):
        pass
    assert timings.graph >= 0.0
    assert timings.total == pytest.approx(timings.graph)


def test_largest():
    timings = StageTimings(matching=3.0, verification=5.0, graph=1.0)
    assert timings.largest(2) == ["verification", "matching"]


def test_sparse_clouds_fail_softly(config):
    points = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    cloud = OrientedPointCloud(points, np.tile([0.0, 0.0, 1.0], (3, 1)))
    result = register(cloud, cloud, config)
    assert result.failed
    assert result.reason == "no correspondences"
    assert result.best is None
    np.testing.assert_array_equal(result.transform.as_matrix(), np.eye(4))


def test_empty_source_raises(wedge_box_cloud, config):
    with pytest.raises(GeometryError, match="non-empty"):
        register(OrientedPointCloud.empty(), wedge_box_cloud, config)


@pytest.mark.slow
def test_self_registration_is_identity(wedge_box_cloud, config):
    result = register(wedge_box_cloud, wedge_box_cloud, config)
    assert not result.failed
    assert rotation_error(RigidTransform.identity(), result.transform) < 0.5
    assert translation_error(RigidTransform.identity(), result.transform) < 0.5 * MM
    converged = [h.converged for h in result.hypotheses]
    assert converged == sorted(converged, reverse=True)
    residuals = [h.residual for h in result.hypotheses if h.converged]
    assert residuals == sorted(residuals)


@pytest.mark.slow
def test_rock_patch_sampled_apart_from_the_model(config):
    # patch and model are separate draws, so no source point coincides with a model point
    scene = generate_scene(build_mesh("rock"), 0.1, NoiseSpec(), seed=5)
    result = register(scene.source, scene.target, config)
    assert not result.failed
    assert rotation_error(scene.gt, result.transform) < 2.0
    assert translation_error(scene.gt, result.transform) < 2.0 * MM


@pytest.mark.slow
def test_flat_touch_is_reported_not_trusted(wedge_box, wedge_box_cloud, config):
    dense = sample_mesh(wedge_box, 200_000, seed=7)
    centre = np.array([0.0, 0.0, -15.0]) * MM
    disc = np.linalg.norm(dense.points - centre, axis=1) < 10 * MM
    result = register(dense.subset(np.flatnonzero(disc)), wedge_box_cloud, config)
    assert result.failed
    assert result.reason


@pytest.mark.slow
def test_feature_rich_meshes_register_to_a_degree_and_a_millimetre(config):
    scenes = generate_scenes(FEATURE_RICH, range(4), patch_fraction=0.1)
    hits = 0
    for scene in scenes:
        result = register(scene.source, scene.target, config)
        metrics = evaluate(scene.gt, result.transform, result.failed, symmetries_of(scene.mesh_name))
        hits += metrics.success and metrics.re < 1.0 and metrics.te < 1.0 * MM
    assert hits >= math.ceil(0.9 * len(scenes))
