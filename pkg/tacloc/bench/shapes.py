"""Procedural object meshes for synthetic benchmarks.

Every shape is built in code (metres, centred near the origin) with outward-facing
triangles. Three superellipsoids cover symmetric, feature-poor objects. The wedge
box, mug and cone-sphere have sharp or revolved features whose small patches still
recur across the object. The rock, pebble and dented block carry seeded bumps and
dents, so a small patch of them fits in one place only.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from tacloc.core.config import MM
from tacloc.core.errors import GeometryError
from tacloc.core.mesh import TriangleMesh

_LAT = 48
_LON = 96
_FINE_LAT = 96
_FINE_LON = 192


def _signed_pow(x: np.ndarray, e: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** e


def _signed_volume(vertices: np.ndarray, faces: np.ndarray) -> float:
    v0, v1, v2 = (vertices[faces[:, k]] for k in range(3))
    return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)


def _orient_outward(mesh: TriangleMesh) -> TriangleMesh:
    """Flip each closed component whose signed volume is negative."""
    faces = mesh.faces.copy()
    labels = mesh.components()
    for label in np.unique(labels):
        part = labels == label
        if _signed_volume(mesh.vertices, faces[part]) < 0:
            faces[part] = faces[part][:, [0, 2, 1]]
    return TriangleMesh(mesh.vertices, faces, name=mesh.name)


def _revolve(profile: np.ndarray, segments: int = _LON) -> tuple[np.ndarray, np.ndarray]:
    """Surface of revolution about z of a polyline of (r, z); r == 0 vertices become poles."""
    angles = 2.0 * np.pi * np.arange(segments) / segments
    rings: list[list[int]] = []
    vertices: list[np.ndarray] = []
    for r, z in profile:
        start = sum(len(ring) for ring in rings)
        if r <= 0:
            vertices.append(np.array([[0.0, 0.0, z]]))
            rings.append([start])
        else:
            vertices.append(np.column_stack([r * np.cos(angles), r * np.sin(angles), np.full(segments, z)]))
            rings.append(list(range(start, start + segments)))

    faces = []
    for lower, upper in zip(rings[:-1], rings[1:]):
        for j in range(segments):
            k = (j + 1) % segments
            if len(lower) == 1:
                faces.append((lower[0], upper[k], upper[j]))
            elif len(upper) == 1:
                faces.append((lower[j], lower[k], upper[0]))
            else:
                faces.append((lower[j], lower[k], upper[k]))
                faces.append((lower[j], upper[k], upper[j]))
    return np.concatenate(vertices), np.array(faces)


def _latlong(
    point_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    name: str,
    n_lat: int = _LAT,
    n_lon: int = _LON,
) -> TriangleMesh:
    """Closed sphere-topology mesh from a parametric map of (latitude, longitude)."""
    lat = np.linspace(-np.pi / 2, np.pi / 2, n_lat + 1)
    lon = 2.0 * np.pi * np.arange(n_lon) / n_lon - np.pi
    # the profile is only used for its topology; positions come from point_fn
    profile = np.column_stack([np.where(np.abs(np.cos(lat)) < 1e-12, 0.0, 1.0), lat])
    _, faces = _revolve(profile, n_lon)
    points = [point_fn(np.array([lat[0]]), np.array([0.0]))]
    grid_lat, grid_lon = np.meshgrid(lat[1:-1], lon, indexing="ij")
    points.append(point_fn(grid_lat.reshape(-1), grid_lon.reshape(-1)))
    points.append(point_fn(np.array([lat[-1]]), np.array([0.0])))
    return _orient_outward(TriangleMesh(np.concatenate(points), faces, name=name))


def superellipsoid(
    semi_axes: tuple[float, float, float], eps1: float, eps2: float, name: str
) -> TriangleMesh:
    a, b, c = semi_axes

    def point(eta: np.ndarray, omega: np.ndarray) -> np.ndarray:
        ce, se = _signed_pow(np.cos(eta), eps1), _signed_pow(np.sin(eta), eps1)
        return np.column_stack(
            [a * ce * _signed_pow(np.cos(omega), eps2), b * ce * _signed_pow(np.sin(omega), eps2), c * se]
        )

    return _latlong(point, name)


def superellipsoid_round() -> TriangleMesh:
    return superellipsoid((30 * MM, 22 * MM, 15 * MM), 1.0, 1.0, "superellipsoid_round")


def superellipsoid_boxy() -> TriangleMesh:
    return superellipsoid((30 * MM, 22 * MM, 15 * MM), 0.3, 0.3, "superellipsoid_boxy")


def superellipsoid_pinched() -> TriangleMesh:
    return superellipsoid((30 * MM, 22 * MM, 15 * MM), 1.6, 0.8, "superellipsoid_pinched")


def bumpy_superellipsoid(
    semi_axes: tuple[float, float, float],
    eps1: float,
    eps2: float,
    n_bumps: int,
    seed: int,
    name: str,
    dent_share: float = 0.5,
) -> TriangleMesh:
    """Superellipsoid whose surface is pushed out (bumps) or in (dents) by Gaussian blobs.

    Blob centres, widths (4 to 8 mm) and heights (1.5 to 4 mm) come from ``seed``, so
    the shape is the same every run but no patch of it repeats elsewhere.
    """
    a, b, c = semi_axes
    rng = np.random.default_rng(seed)
    centres = rng.normal(size=(n_bumps, 3))
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)
    mean_radius = (a + b + c) / 3.0
    widths = rng.uniform(4.0, 8.0, n_bumps) * MM / mean_radius  # on the unit sphere
    heights = rng.uniform(1.5, 4.0, n_bumps) * MM
    heights[rng.random(n_bumps) < dent_share] *= -1.0

    def point(eta: np.ndarray, omega: np.ndarray) -> np.ndarray:
        ce, se = _signed_pow(np.cos(eta), eps1), _signed_pow(np.sin(eta), eps1)
        base = np.column_stack(
            [a * ce * _signed_pow(np.cos(omega), eps2), b * ce * _signed_pow(np.sin(omega), eps2), c * se]
        )
        direction = base / np.linalg.norm(base, axis=1, keepdims=True)
        chord2 = np.sum((direction[:, None, :] - centres[None]) ** 2, axis=2)
        lift = np.exp(-0.5 * chord2 / widths**2) @ heights
        return base + lift[:, None] * direction

    return _latlong(point, name, _FINE_LAT, _FINE_LON)


def rock() -> TriangleMesh:
    return bumpy_superellipsoid((30 * MM, 24 * MM, 18 * MM), 1.0, 1.0, 40, 11, "rock")


def pebble() -> TriangleMesh:
    return bumpy_superellipsoid((32 * MM, 26 * MM, 13 * MM), 0.8, 0.9, 36, 23, "pebble")


def dented_block() -> TriangleMesh:
    """Rounded block covered mostly in dents."""
    return bumpy_superellipsoid((30 * MM, 22 * MM, 18 * MM), 0.4, 0.4, 32, 37, "dented_block", dent_share=0.8)


def _grid_face(origin, u, v, outward, nu: int, nv: int, height=None) -> tuple[np.ndarray, np.ndarray]:
    u, v, outward = (np.asarray(x, dtype=np.float64) for x in (u, v, outward))
    if np.dot(np.cross(u, v), outward) < 0:
        u, v, nu, nv = v, u, nv, nu
    s, t = np.meshgrid(np.linspace(0, 1, nu), np.linspace(0, 1, nv), indexing="ij")
    points = np.asarray(origin) + s.reshape(-1, 1) * u + t.reshape(-1, 1) * v
    if height is not None:
        points = points - height(points)[:, None] * outward
    idx = np.arange(nu * nv).reshape(nu, nv)
    a, b = idx[:-1, :-1].reshape(-1), idx[1:, :-1].reshape(-1)
    c, d = idx[1:, 1:].reshape(-1), idx[:-1, 1:].reshape(-1)
    faces = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return points, faces


def _weld(parts: list[tuple[np.ndarray, np.ndarray]], name: str) -> TriangleMesh:
    vertices, faces, offset = [], [], 0
    for points, tris in parts:
        vertices.append(points)
        faces.append(tris + offset)
        offset += len(points)
    stacked = np.concatenate(vertices)
    _, first, inverse = np.unique(np.round(stacked, 9), axis=0, return_index=True, return_inverse=True)
    return TriangleMesh(stacked[first], inverse.reshape(-1)[np.concatenate(faces)], name=name)


def wedge_box(spacing: float = 1.0 * MM) -> TriangleMesh:
    """60 x 40 x 30 mm box with an off-centre wedge groove engraved in its top face."""
    half = np.array([30.0, 20.0, 15.0]) * MM
    counts = np.round(2 * half / spacing).astype(int) + 1
    groove_x, groove_half_width, depth = 12.0 * MM, 4.0 * MM, 4.0 * MM
    y_start, y_end, ramp = -10.0 * MM, 14.0 * MM, 3.0 * MM

    def groove(points: np.ndarray) -> np.ndarray:
        across = np.clip(1.0 - np.abs(points[:, 0] - groove_x) / groove_half_width, 0.0, 1.0)
        along = np.clip((points[:, 1] - y_start) / ramp, 0.0, 1.0) * np.clip((y_end - points[:, 1]) / ramp, 0.0, 1.0)
        return depth * across * along

    parts = []
    for axis in range(3):
        i, j = [k for k in range(3) if k != axis]
        for sign in (-1.0, 1.0):
            outward = np.zeros(3)
            outward[axis] = sign
            u, v = np.zeros(3), np.zeros(3)
            u[i], v[j] = 2 * half[i], 2 * half[j]
            origin = -half * (np.arange(3) != axis) + sign * half * (np.arange(3) == axis)
            height = groove if (axis == 2 and sign > 0) else None
            parts.append(_grid_face(origin, u, v, outward, counts[i], counts[j], height))
    return _orient_outward(_weld(parts, "wedge_box"))


def _torus_arc(center, major: float, minor: float, start: float, stop: float, name: str) -> TriangleMesh:
    """Tube around an arc in the xz plane; open at both ends, normals pointing away from the tube axis."""
    n_arc, n_ring = 48, 24
    arc = np.linspace(start, stop, n_arc)
    ring = 2.0 * np.pi * np.arange(n_ring) / n_ring
    a, r = np.meshgrid(arc, ring, indexing="ij")
    axis_points = np.stack([major * np.cos(a), np.zeros_like(a), major * np.sin(a)], axis=-1)
    radial = np.stack([np.cos(a), np.zeros_like(a), np.sin(a)], axis=-1)
    offset = minor * (np.cos(r)[..., None] * radial + np.sin(r)[..., None] * np.array([0.0, 1.0, 0.0]))
    vertices = (np.asarray(center) + axis_points + offset).reshape(-1, 3)
    idx = np.arange(n_arc * n_ring).reshape(n_arc, n_ring)
    nxt = np.roll(idx, -1, axis=1)
    p, q, s, t = idx[:-1].reshape(-1), idx[1:].reshape(-1), nxt[1:].reshape(-1), nxt[:-1].reshape(-1)
    faces = np.concatenate([np.column_stack([p, q, s]), np.column_stack([p, s, t])])
    mesh = TriangleMesh(vertices, faces, name=name)
    centers = (np.asarray(center) + axis_points[:-1]).reshape(-1, 3)
    away = mesh.face_centroids[: len(p)] - centers
    if np.einsum("ij,ij->i", mesh.face_normals[: len(p)], away).sum() < 0:
        mesh = TriangleMesh(vertices, faces[:, [0, 2, 1]], name=name)
    return mesh


def mug() -> TriangleMesh:
    """Open-topped cup with a thick wall and a half-torus handle."""
    radius, height, wall = 35.0 * MM, 80.0 * MM, 4.0 * MM
    profile = np.array(
        [
            [0.0, 0.0],
            [radius, 0.0],
            [radius, height],
            [radius - wall, height],
            [radius - wall, wall],
            [0.0, wall],
        ]
    )
    vertices, faces = _revolve(profile)
    body = _orient_outward(TriangleMesh(vertices - [0.0, 0.0, height / 2], faces, name="mug_body"))
    handle = _torus_arc([radius - 2.0 * MM, 0.0, 0.0], 20.0 * MM, 5.0 * MM, -np.pi / 2, np.pi / 2, "mug_handle")
    return TriangleMesh.merge([body, handle], name="mug")


def cone_sphere() -> TriangleMesh:
    """Cone on its base with a sphere fused to its flank, off the cone axis."""
    cone_v, cone_f = _revolve(np.array([[0.0, 0.0], [25.0 * MM, 0.0], [0.0, 50.0 * MM]]))
    cone = _orient_outward(TriangleMesh(cone_v - [0.0, 0.0, 25.0 * MM], cone_f, name="cone"))
    ball = superellipsoid((14 * MM, 14 * MM, 14 * MM), 1.0, 1.0, "sphere").transformed(
        np.eye(3), [16.0 * MM, 0.0, -8.0 * MM]
    )
    return TriangleMesh.merge([cone, ball], name="cone_sphere")


MESH_SUITE: dict[str, Callable[[], TriangleMesh]] = {
    "superellipsoid_round": superellipsoid_round,
    "superellipsoid_boxy": superellipsoid_boxy,
    "superellipsoid_pinched": superellipsoid_pinched,
    "wedge_box": wedge_box,
    "mug": mug,
    "cone_sphere": cone_sphere,
    "rock": rock,
    "pebble": pebble,
    "dented_block": dented_block,
}

# surfaces where a tenth of the area pins down a single pose
FEATURE_RICH = ("rock", "pebble", "dented_block")
# sharp or revolved features, but patches that repeat under box or rotational symmetry
STRUCTURED = ("wedge_box", "mug", "cone_sphere")

_HALF_TURNS = [np.eye(3), np.diag([1.0, -1.0, -1.0]), np.diag([-1.0, 1.0, -1.0]), np.diag([-1.0, -1.0, 1.0])]

SYMMETRIES: dict[str, list[np.ndarray]] = {
    "superellipsoid_round": _HALF_TURNS,
    "superellipsoid_boxy": _HALF_TURNS,
    "superellipsoid_pinched": _HALF_TURNS,
    "wedge_box": [np.eye(3)],
    "mug": [np.eye(3)],
    "cone_sphere": [np.eye(3)],
    "rock": [np.eye(3)],
    "pebble": [np.eye(3)],
    "dented_block": [np.eye(3)],
}


def build_mesh(name: str) -> TriangleMesh:
    try:
        return MESH_SUITE[name]()
    except KeyError:
        raise GeometryError(
            f"unknown mesh {name!r}; choose from {', '.join(sorted(MESH_SUITE))}"
        ) from None


def symmetries_of(name: str) -> list[np.ndarray]:
    """Proper rotations (about the model origin) mapping the shape onto itself."""
    return SYMMETRIES.get(name, [np.eye(3)])
