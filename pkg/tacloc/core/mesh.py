"""Indexed triangle meshes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import numpy.typing as npt
import trimesh
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from tacloc.core.errors import GeometryError


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Vertices (metres) and counter-clockwise triangles (outward normals)."""

    vertices: np.ndarray
    faces: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(faces) == 0:
            raise GeometryError("mesh has no triangles")
        if faces.min() < 0 or faces.max() >= len(vertices):
            raise GeometryError(f"face index out of range for {len(vertices)} vertices")
        if not np.all(np.isfinite(vertices)):
            raise GeometryError("mesh has non-finite vertices")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @cached_property
    def _cross(self) -> np.ndarray:
        v0, v1, v2 = (self.vertices[self.faces[:, k]] for k in range(3))
        return np.cross(v1 - v0, v2 - v0)

    @property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    @property
    def face_normals(self) -> np.ndarray:
        """Unit face normals; zero rows for zero-area faces."""
        lengths = np.linalg.norm(self._cross, axis=1, keepdims=True)
        safe = np.where(lengths > 0, lengths, 1.0)
        return np.where(lengths > 0, self._cross / safe, 0.0)

    @property
    def face_centroids(self) -> np.ndarray:
        return self.vertices[self.faces].mean(axis=1)

    @property
    def diagonal(self) -> float:
        """Bounding-box diagonal length."""
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def face_adjacency(self) -> coo_matrix:
        """Sparse face-to-face adjacency through shared vertices."""
        n_faces = len(self.faces)
        rows = np.repeat(np.arange(n_faces), 3)
        incidence = coo_matrix(
            (np.ones(3 * n_faces), (rows, self.faces.reshape(-1))),
            shape=(n_faces, len(self.vertices)),
        ).tocsr()
        adjacency = (incidence @ incidence.T).tocoo()
        keep = adjacency.row != adjacency.col
        return coo_matrix(
            (np.ones(int(keep.sum())), (adjacency.row[keep], adjacency.col[keep])),
            shape=(n_faces, n_faces),
        )

    def components(self) -> np.ndarray:
        """Connected-component label per face."""
        _, labels = connected_components(self.face_adjacency(), directed=False)
        return labels

    def to_trimesh(self) -> trimesh.Trimesh:
        """Unprocessed trimesh view; vertex and face order are kept."""
        return trimesh.Trimesh(vertices=self.vertices, faces=self.faces, process=False)

    @staticmethod
    def merge(meshes: list[TriangleMesh], name: str = "") -> TriangleMesh:
        vertices, faces, offset = [], [], 0
        for mesh in meshes:
            vertices.append(mesh.vertices)
            faces.append(mesh.faces + offset)
            offset += len(mesh.vertices)
        return TriangleMesh(np.concatenate(vertices), np.concatenate(faces), name=name)

    def transformed(self, rotation: npt.ArrayLike, translation: npt.ArrayLike) -> TriangleMesh:
        r = np.asarray(rotation, dtype=np.float64)
        return TriangleMesh(self.vertices @ r.T + np.asarray(translation), self.faces, name=self.name)
