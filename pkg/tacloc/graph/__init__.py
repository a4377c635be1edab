"""Compatibility graph construction and maximal clique search."""

from tacloc.graph.cliques import (
    Clique,
    CliqueEnumeration,
    enumerate_cliques,
    maximal_cliques,
    select_top_cliques,
    write_clique_list,
)
from tacloc.graph.compatibility import (
    CompatibilityGraph,
    build_graph,
    compatibility_matrix,
    pairwise_consistent,
)

__all__ = [
    "Clique",
    "CliqueEnumeration",
    "CompatibilityGraph",
    "build_graph",
    "compatibility_matrix",
    "enumerate_cliques",
    "maximal_cliques",
    "pairwise_consistent",
    "select_top_cliques",
    "write_clique_list",
]
