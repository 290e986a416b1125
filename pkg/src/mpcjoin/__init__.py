"""Worst-case optimal multiway joins on a simulated massively parallel cluster."""

from .hypergraph import (Hypergraph, LpResult, agm_bound, build_hypergraph, canonical_packing,
                         edge_cover_lp, edge_packing_lp, induced_subgraph, quasi_packing_number)
from .joinalg import SolveResult, solve_join
from .mpcsim import Cluster, LoadReport
from .relcore import JoinQuery, Relation, join_oracle, relation

__all__ = [
    "Hypergraph", "LpResult", "agm_bound", "build_hypergraph", "canonical_packing",
    "edge_cover_lp", "edge_packing_lp", "induced_subgraph", "quasi_packing_number",
    "SolveResult", "solve_join", "Cluster", "LoadReport", "JoinQuery", "Relation",
    "join_oracle", "relation",
]
