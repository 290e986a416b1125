"""Pattern subgraph enumeration as a simple binary join.

Every pattern vertex becomes an attribute and every pattern edge a relation
holding the data graph's edges in both directions, so the join result is
exactly the set of homomorphisms from the pattern into the data graph.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Iterable

from .joinalg import solve_join
from .mpcsim import LoadReport
from .relcore import JoinQuery, Relation
from .shapes import SHAPES, UnknownShape

log = logging.getLogger(__name__)

MAX_PATTERN_VERTICES = 6
PATTERNS = ("edge", "path3", "triangle", "cycle4", "clique4")
MODES = ("homomorphism", "injective")


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternGraph:
    vertices: tuple
    edges: tuple  # sorted pairs

    def __post_init__(self):
        edges = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise PatternError(f"self-loop on pattern vertex {u!r}")
            edges.add(tuple(sorted((u, v))))
        verts = tuple(sorted(set(self.vertices) | {x for e in edges for x in e}))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(sorted(edges)))
        if not edges:
            raise PatternError("pattern has no edges")
        if len(verts) > MAX_PATTERN_VERTICES:
            raise PatternError(f"pattern has {len(verts)} vertices; at most {MAX_PATTERN_VERTICES} supported")
        touched = {x for e in edges for x in e}
        lonely = [v for v in verts if v not in touched]
        if lonely:
            raise PatternError(f"pattern vertices without edges: {lonely}")
        if not _connected(verts, edges):
            raise PatternError("pattern is not connected")

    @classmethod
    def named(cls, name: str) -> "PatternGraph":
        if name not in PATTERNS:
            raise UnknownShape(name)
        return cls((), tuple(tuple(e) for e in SHAPES[name]))


def _connected(verts, edges) -> bool:
    adj = {v: set() for v in verts}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, stack = {verts[0]}, [verts[0]]
    while stack:
        for w in adj[stack.pop()] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == len(verts)


@dataclass(frozen=True)
class DataGraph:
    edges: frozenset  # undirected, stored as (min, max)

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "DataGraph":
        out = set()
        loops = 0
        for u, v in pairs:
            if u == v:
                loops += 1
                continue
            out.add((min(u, v), max(u, v)))
        if loops:
            log.info("dropped %d self-loops from the data graph", loops)
        return cls(frozenset(out))

    @property
    def vertices(self) -> set:
        # isolated vertices never appear: they have no edge to list
        return {x for e in self.edges for x in e}

    def directed(self) -> frozenset:
        return frozenset(self.edges | {(v, u) for u, v in self.edges})

    def __len__(self):
        return len(self.edges)


def read_edge_list(path) -> DataGraph:
    pairs = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise PatternError(f"{path}:{lineno}: expected 'u v' with unsigned integers")
            pairs.append((int(parts[0]), int(parts[1])))
    return DataGraph.from_pairs(pairs)


def write_edge_list(path, g: DataGraph) -> None:
    with Path(path).open("w") as fh:
        for u, v in sorted(g.edges):
            fh.write(f"{u} {v}\n")


def read_pattern(source: str) -> PatternGraph:
    """A built-in pattern name, or a path to an edge list with arbitrary vertex tokens."""
    if source in PATTERNS:
        return PatternGraph.named(source)
    path = Path(source)
    if not path.exists():
        raise PatternError(f"unknown pattern {source!r}; built-ins: {', '.join(PATTERNS)}")
    edges = []
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) == 1:
            edges.append((parts[0], parts[0]))  # rejected below as a loop
        else:
            edges.append((parts[0], parts[1]))
    return PatternGraph((), tuple(edges))


def pattern_to_query(pattern: PatternGraph, data: DataGraph) -> JoinQuery:
    rows = data.directed()
    return JoinQuery(tuple(Relation(e, rows, "R_" + "".join(map(str, e))) for e in pattern.edges))


def automorphisms(pattern: PatternGraph) -> list:
    """Edge-preserving permutations of the pattern vertices, as dicts."""
    verts = pattern.vertices
    edges = set(pattern.edges)
    out = []
    for perm in permutations(verts):
        sigma = dict(zip(verts, perm))
        if all(tuple(sorted((sigma[u], sigma[v]))) in edges for u, v in pattern.edges):
            out.append(sigma)
    return out


def dedup_orbits(attrs: tuple, rows: Iterable, autos: list) -> set:
    """Keep the lexicographically smallest tuple of each automorphism orbit."""
    pos = {a: i for i, a in enumerate(attrs)}
    perms = [tuple(pos[s[a]] for a in attrs) for s in autos]
    keep = set()
    for row in rows:
        if all(row <= tuple(row[i] for i in perm) for perm in perms):
            keep.add(row)
    return keep


@dataclass
class EmbeddingResult:
    attrs: tuple
    rows: set
    report: LoadReport
    homomorphisms: int

    def __len__(self):
        return len(self.rows)

    def sorted_rows(self) -> list:
        return sorted(self.rows)


def enumerate_embeddings(pattern: PatternGraph, data: DataGraph, p: int = 1, seed: int = 0,
                         mode: str = "homomorphism", dedup: bool = False,
                         lam: int | None = None) -> EmbeddingResult:
    if mode not in MODES:
        raise PatternError(f"mode must be one of {MODES}")
    if not data.edges:
        return EmbeddingResult(pattern.vertices, set(), LoadReport(), 0)
    res = solve_join(pattern_to_query(pattern, data), p, seed=seed, lam=lam)
    attrs = res.relation.scheme
    rows = set(res.relation.rows)
    hom = len(rows)
    if mode == "injective":
        rows = {r for r in rows if len(set(r)) == len(r)}
    if dedup:
        rows = dedup_orbits(attrs, rows, automorphisms(pattern))
    return EmbeddingResult(attrs, rows, res.report, hom)
