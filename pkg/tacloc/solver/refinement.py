"""Point-to-plane refinement of a pose against the downsampled target."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from tacloc.core.config import PipelineConfig
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.core.spatial import SpatialIndex

logger = logging.getLogger(__name__)

MIN_ASSOCIATIONS = 6
STARVED_RESIDUAL = 100.0
MAX_STEP_HALVINGS = 5


@dataclass(frozen=True, eq=False)
class RefinementResult:
    transform: RigidTransform
    residual: float  # mean squared point-to-plane distance (m^2)
    converged: bool
    iterations: int
    n_associations: int
    inlier_fraction: float  # share of source points within the inlier distance after refinement
    constraint: float = 0.0  # see constraint_ratio; 0 when starved
    steps: tuple[tuple[float, float], ...] = ()  # (before, after) residual of each accepted step


@dataclass(frozen=True, eq=False)
class _Associations:
    points: np.ndarray  # moved source points that passed the gate
    targets: np.ndarray
    normals: np.ndarray
    distances: np.ndarray  # nearest-neighbour distance of every source point

    def __len__(self) -> int:
        return len(self.points)

    def residual(self, points: np.ndarray) -> float:
        r = np.einsum("ij,ij->i", points - self.targets, self.normals)
        return float(np.mean(r * r))


def constraint_ratio(points: np.ndarray, normals: np.ndarray) -> float:
    """How firmly point-to-plane distances pin down all six pose parameters.

    Smallest over largest eigenvalue of the point-to-plane normal matrix, with the
    rotation columns divided by the RMS radius of ``points`` about their centroid so
    both blocks are unitless. Zero means some motion leaves every distance unchanged:
    a slide along a plane or an edge, or a spin about a sphere centre or a
    revolution axis.
    """
    if len(points) == 0:
        return 0.0
    centred = points - points.mean(axis=0)
    scale = float(np.sqrt(np.mean(np.sum(centred**2, axis=1))))
    if scale == 0:
        return 0.0
    a = np.hstack([np.cross(centred, normals) / scale, normals])
    eigenvalues = np.linalg.eigvalsh(a.T @ a / len(a))
    if not eigenvalues[-1] > 0:
        return 0.0
    return float(max(eigenvalues[0], 0.0) / eigenvalues[-1])


def _associate(
    transform: RigidTransform,
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    index: SpatialIndex,
    gate: float,
) -> _Associations:
    moved = transform.apply_points(source.points)
    idx, dist = index.nearest_many(moved)
    keep = dist <= gate
    return _Associations(moved[keep], target.points[idx[keep]], target.normals[idx[keep]], dist)


def _linear_step(assoc: _Associations) -> tuple[np.ndarray, np.ndarray]:
    """Small-angle rotation vector and translation minimizing the linearized residual."""
    r = np.einsum("ij,ij->i", assoc.points - assoc.targets, assoc.normals)
    a = np.hstack([np.cross(assoc.points, assoc.normals), assoc.normals])
    x, *_ = np.linalg.lstsq(a, -r, rcond=None)
    return x[:3], x[3:]


def refine_point_to_plane(
    initial: RigidTransform,
    source: OrientedPointCloud,
    target: OrientedPointCloud,
    config: PipelineConfig,
    target_index: SpatialIndex | None = None,
) -> RefinementResult:
    """Gauss-Newton point-to-plane alignment of ``source`` onto ``target``.

    Each iteration re-associates every source point with its nearest target point,
    drops pairs farther than ``config.verification_gate``, solves the linearized
    problem and left-composes the increment through the exponential map. A step that
    raises the residual (associations held fixed) is halved up to five times; when
    no fraction of it helps, the iteration stops unconverged at the current pose. A
    linearized step shorter than ``config.refine_tol`` ends the iteration as converged.
    Losing the associations part way returns ``initial`` unchanged.
    """
    index = target_index if target_index is not None else SpatialIndex(target.points)
    gate = config.verification_gate
    transform = initial
    converged = False
    iterations = 0
    steps: list[tuple[float, float]] = []

    assoc = _associate(transform, source, target, index, gate)
    if len(assoc) < MIN_ASSOCIATIONS:
        logger.debug("refinement starved: %d associations within the gate", len(assoc))
        return RefinementResult(initial, STARVED_RESIDUAL, False, 0, len(assoc), 0.0)

    for iterations in range(1, config.refine_max_iters + 1):
        current = assoc.residual(assoc.points)
        omega, delta = _linear_step(assoc)
        if np.linalg.norm(delta) < config.refine_tol and np.linalg.norm(omega) < config.refine_tol:
            converged = True
            break
        scale = 1.0
        accepted = None
        for _ in range(MAX_STEP_HALVINGS + 1):
            step = RigidTransform.exp(scale * omega, scale * delta)
            after = assoc.residual(step.apply_points(assoc.points))
            if after <= current:
                accepted = step
                steps.append((current, after))
                break
            scale *= 0.5
        if accepted is None:
            logger.debug("no step fraction lowered the residual at iteration %d", iterations)
            break
        transform = accepted @ transform
        assoc = _associate(transform, source, target, index, gate)
        if len(assoc) < MIN_ASSOCIATIONS:
            logger.debug("refinement lost its associations after %d iterations", iterations)
            return RefinementResult(initial, STARVED_RESIDUAL, False, iterations, len(assoc), 0.0)

    final = _associate(transform, source, target, index, gate)
    if len(final) < MIN_ASSOCIATIONS:
        return RefinementResult(initial, STARVED_RESIDUAL, False, iterations, len(final), 0.0)
    inliers = float(np.mean(final.distances <= config.inlier_distance))
    return RefinementResult(
        transform,
        final.residual(final.points),
        converged,
        iterations,
        len(final),
        inliers,
        constraint_ratio(final.points, final.normals),
        tuple(steps),
    )
