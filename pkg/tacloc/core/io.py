"""File formats: PLY clouds, 4x4 transforms, tactile grids, meshes, CSV tables."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd
import trimesh
from pyntcloud import PyntCloud
from pyntcloud.io import read_ply as read_ply_file

from tacloc.core.config import MM
from tacloc.core.errors import FormatError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.core.mesh import TriangleMesh


def format_float(value: float) -> str:
    """Shortest round-trip representation, stable across runs."""
    return repr(float(value))


# ---------------------------------------------------------------------------
# PLY clouds


def read_ply_arrays(path: str | Path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Vertex positions and, when present, normals from an ASCII or binary PLY file."""
    try:
        points = read_ply_file(str(path))["points"]
    except (ValueError, KeyError, IndexError) as exc:
        raise FormatError(f"{path}: not a readable PLY file: {exc}") from exc
    missing = [axis for axis in ("x", "y", "z") if axis not in points.columns]
    if missing:
        raise FormatError(f"{path}: PLY vertices lack properties {missing}")
    xyz = points[["x", "y", "z"]].to_numpy(dtype=np.float64)
    normals = None
    if {"nx", "ny", "nz"}.issubset(points.columns):
        normals = points[["nx", "ny", "nz"]].to_numpy(dtype=np.float64)
    return xyz, normals


def read_ply(path: str | Path) -> OrientedPointCloud:
    points, normals = read_ply_arrays(path)
    if normals is None:
        raise FormatError(f"{path}: PLY file has no nx, ny, nz properties")
    return OrientedPointCloud.from_unnormalized(points, normals)


def write_ply(path: str | Path, cloud: OrientedPointCloud) -> None:
    """Binary little-endian PLY with double x, y, z, nx, ny, nz."""
    columns = dict(zip(("x", "y", "z"), cloud.points.T))
    columns.update(zip(("nx", "ny", "nz"), cloud.normals.T))
    PyntCloud(pd.DataFrame(columns)).to_file(str(path))


# ---------------------------------------------------------------------------
# Transforms


def format_transform(transform: RigidTransform) -> str:
    m = transform.as_matrix()
    return "\n".join(" ".join(format_float(v) for v in row) for row in m) + "\n"


def parse_transform(text: str) -> RigidTransform:
    try:
        values = [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise FormatError(f"transform contains a non-numeric token: {exc}") from exc
    if len(values) != 16:
        raise FormatError(f"transform must have 16 numbers, got {len(values)}")
    return RigidTransform.from_matrix(np.array(values).reshape(4, 4))


def read_transform(path: str | Path) -> RigidTransform:
    return parse_transform(Path(path).read_text())


def write_transform(path: str | Path, transform: RigidTransform) -> None:
    Path(path).write_text(format_transform(transform))


# ---------------------------------------------------------------------------
# Tactile grids: header "W H pixel_pitch_mm", then H rows of W values


def read_grid(path: str | Path, value_scale: float = 1.0) -> tuple[np.ndarray, float]:
    """Grid values (rows = image y) and pixel pitch in metres."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 3:
        raise FormatError(f"{path}: grid header must be 'W H pixel_pitch_mm'")
    try:
        width, height = int(tokens[0]), int(tokens[1])
        pitch = float(tokens[2]) * MM
        values = np.array([float(tok) for tok in tokens[3:]])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed grid: {exc}") from exc
    if len(values) != width * height:
        raise FormatError(f"{path}: expected {width * height} values, got {len(values)}")
    return values.reshape(height, width) * value_scale, pitch


def write_grid(path: str | Path, grid: npt.ArrayLike, pitch: float, value_scale: float = 1.0) -> None:
    g = np.asarray(grid, dtype=np.float64)
    height, width = g.shape
    lines = [f"{width} {height} {format_float(pitch / MM)}"]
    for row in g / value_scale:
        lines.append(" ".join(format_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Meshes

MESH_SUFFIXES = ("off", "stl", "ply", "obj")


def read_mesh(path: str | Path, scale: float = 1.0) -> TriangleMesh:
    """Triangle mesh from OFF, STL, PLY or OBJ; polygons are triangulated and STL corners welded."""
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in MESH_SUFFIXES:
        raise FormatError(f"unsupported mesh format {suffix!r} (expected one of {', '.join(MESH_SUFFIXES)})")
    try:
        loaded = trimesh.load(str(path), file_type=suffix, process=False, force="mesh")
    except (ValueError, KeyError, IndexError) as exc:
        raise FormatError(f"{path}: malformed {suffix.upper()} mesh: {exc}") from exc
    if not isinstance(loaded, trimesh.Trimesh):
        raise FormatError(f"{path}: file does not hold a triangle mesh")
    if suffix == "stl":
        loaded.merge_vertices()
    return TriangleMesh(np.asarray(loaded.vertices) * scale, loaded.faces, name=Path(path).stem)


def write_off(path: str | Path, mesh: TriangleMesh) -> None:
    Path(path).write_text(mesh.to_trimesh().export(file_type="off"))


# ---------------------------------------------------------------------------
# CSV


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
