"""Maximal clique enumeration (Bron-Kerbosch with pivoting and degeneracy ordering).

Vertex sets are Python integers used as bitsets: bit ``v`` is set when node ``v``
is a member.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from tacloc.graph.compatibility import CompatibilityGraph

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class Clique:
    members: tuple[int, ...]  # sorted node indices
    degenerate: bool = False  # two-member clique kept only because nothing larger exists

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CliqueEnumeration:
    cliques: list[Clique]
    expansions: int
    exhausted: bool  # the expansion budget fired before the search completed

    def __len__(self) -> int:
        return len(self.cliques)


class _BudgetExhausted(Exception):
    pass


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _neighbor_masks(adjacency: np.ndarray) -> list[int]:
    masks = []
    for row in adjacency:
        mask = 0
        for v in np.flatnonzero(row).tolist():
            mask |= 1 << v
        masks.append(mask)
    return masks


def degeneracy_order(adjacency: np.ndarray) -> list[int]:
    """Repeatedly remove a minimum-degree vertex (lowest index on ties)."""
    n = len(adjacency)
    degree = adjacency.sum(axis=1).astype(np.int64)
    removed = np.zeros(n, dtype=bool)
    order = []
    for _ in range(n):
        v = int(np.argmin(np.where(removed, np.iinfo(np.int64).max, degree)))
        order.append(v)
        removed[v] = True
        degree[adjacency[v]] -= 1
    return order


class _Search:
    def __init__(self, neighbors: list[int], budget: int):
        self.neighbors = neighbors
        self.budget = budget
        self.expansions = 0
        self.found: list[tuple[int, ...]] = []

    def expand(self, clique: int, candidates: int, excluded: int) -> None:
        self.expansions += 1
        if self.expansions > self.budget:
            raise _BudgetExhausted
        if not candidates and not excluded:
            self.found.append(tuple(_bits(clique)))
            return
        pivot = max(
            _bits(candidates | excluded),
            key=lambda u: ((candidates & self.neighbors[u]).bit_count(), -u),
        )
        for v in _bits(candidates & ~self.neighbors[pivot]):
            self.expand(clique | (1 << v), candidates & self.neighbors[v], excluded & self.neighbors[v])
            candidates &= ~(1 << v)
            excluded |= 1 << v


def enumerate_cliques(graph: CompatibilityGraph, budget: int = DEFAULT_BUDGET) -> CliqueEnumeration:
    """All maximal cliques with at least two members, largest first.

    Ties in size are ordered lexicographically on sorted member indices. When more
    than ``budget`` expansions are needed the search stops and the cliques found so
    far are returned, with ``exhausted`` set.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    adjacency = np.asarray(graph.adjacency, dtype=bool)
    neighbors = _neighbor_masks(adjacency)
    search = _Search(neighbors, budget)
    exhausted = False
    position = {v: k for k, v in enumerate(degeneracy_order(adjacency))}
    try:
        for v, k in position.items():
            later = earlier = 0
            for u in _bits(neighbors[v]):
                if position[u] > k:
                    later |= 1 << u
                else:
                    earlier |= 1 << u
            search.expand(1 << v, later, earlier)
    except _BudgetExhausted:
        exhausted = True
        logger.warning(
            "clique search stopped after %d expansions on a graph of %d nodes and %d edges",
            budget,
            len(graph),
            graph.edge_count,
        )

    members = sorted((m for m in search.found if len(m) >= 2), key=lambda m: (-len(m), m))
    return CliqueEnumeration(
        [Clique(m) for m in members], min(search.expansions, budget), exhausted
    )


def maximal_cliques(
    graph: CompatibilityGraph, max_cliques: int, budget: int = DEFAULT_BUDGET
) -> list[Clique]:
    """Sorted maximal cliques, truncated to ``max_cliques`` after sorting."""
    if max_cliques < 1:
        raise ValueError(f"max_cliques must be >= 1, got {max_cliques}")
    return enumerate_cliques(graph, budget).cliques[:max_cliques]


def select_top_cliques(cliques: Sequence[Clique], k: int) -> list[Clique]:
    """The first ``k`` cliques of size >= 3, or the two-member ones flagged degenerate."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    solid = [c for c in cliques if c.size >= 3]
    if solid:
        return solid[:k]
    pairs = [Clique(c.members, degenerate=True) for c in cliques if c.size == 2]
    if pairs:
        logger.debug("no clique has three members; keeping %d pair cliques", min(k, len(pairs)))
    return pairs[:k]


def write_clique_list(path: str | Path, cliques: Sequence[Clique]) -> None:
    Path(path).write_text("".join(" ".join(map(str, c.members)) + "\n" for c in cliques))
