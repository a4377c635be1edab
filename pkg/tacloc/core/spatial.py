"""KD-tree spatial index over 3D positions."""

from __future__ import annotations

import numpy as np
import numpy.typing as npt
from scipy.spatial import cKDTree

from tacloc.core.errors import GeometryError

class SpatialIndex:
    """Read-only nearest-neighbour and radius index.

    Immutable after construction, so one index may be shared by concurrent readers.
    """

    def __init__(self, points: npt.ArrayLike):
        pts = np.array(points, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 0:
            raise GeometryError("cannot build a spatial index over an empty cloud")
        pts.setflags(write=False)
        self._points = pts
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def nearest(self, query: npt.ArrayLike) -> tuple[int, float]:
        """Index of and distance to the closest stored point."""
        idx, dist = self.nearest_many(np.asarray(query, dtype=np.float64).reshape(1, 3))
        return int(idx[0]), float(dist[0])

    def nearest_many(self, queries: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if len(q) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        k = min(2, len(self._points))
        dist, idx = self._tree.query(q, k=k)
        if k == 1:
            return idx.astype(np.int64), dist
        best = idx[:, 0].astype(np.int64)
        # exact ties resolve to the smallest index, however many points share the distance
        for row in np.flatnonzero(dist[:, 1] == dist[:, 0]):
            found = self._tree.query_ball_point(q[row], dist[row, 0] * (1.0 + 1e-12))
            ring = np.union1d(np.asarray(found, dtype=np.int64), idx[row])
            d = np.linalg.norm(self._points[ring] - q[row], axis=1)
            best[row] = ring[d <= d.min()].min()
        return best, dist[:, 0]

    def radius(self, query: npt.ArrayLike, r: float) -> np.ndarray:
        """Sorted indices of points within ``r`` of ``query`` (inclusive)."""
        found = self._tree.query_ball_point(np.asarray(query, dtype=np.float64), r)
        return np.array(sorted(found), dtype=np.int64)

    def radius_many(self, queries: npt.ArrayLike, r: float) -> list[np.ndarray]:
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        found = self._tree.query_ball_point(q, r)
        return [np.array(sorted(f), dtype=np.int64) for f in found]


def brute_force_nearest(points: npt.ArrayLike, query: npt.ArrayLike) -> tuple[int, float]:
    """Exhaustive scan; the oracle the KD-tree is tested against."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise GeometryError("cannot search an empty cloud")
    d = np.linalg.norm(pts - np.asarray(query, dtype=np.float64), axis=1)
    idx = int(np.argmin(d))  # first occurrence = smallest index
    return idx, float(d[idx])


def nearest_neighbor(index: SpatialIndex, query: npt.ArrayLike) -> tuple[int, float]:
    return index.nearest(query)
