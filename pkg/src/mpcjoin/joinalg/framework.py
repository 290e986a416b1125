"""Light/cross/border/isolated attributes for a heavy set H, and the
centralized semi-join reduction used as a reference by checks and tests."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping

from ..hypergraph import Hypergraph, edge_key
from ..relcore import JoinQuery, Relation, cartesian_oracle, join_oracle
from ..taxonomy import Configuration, ResidualQuery


class FrameworkError(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """How H splits the hypergraph."""

    h_set: frozenset
    l_set: frozenset
    light_edges: tuple
    cross_edges: tuple
    border: frozenset
    i_set: frozenset

    def cross_at(self, x) -> list:
        return [e for e in self.cross_edges if x in e]

    @property
    def core(self) -> frozenset:
        """Light attributes joined by the hypercube (L minus I)."""
        return self.l_set - self.i_set

    def nonempty_subsets_of_i(self) -> list:
        items = sorted(self.i_set)
        return [frozenset(c) for r in range(1, len(items) + 1) for c in combinations(items, r)]


def layout(g: Hypergraph, h: Iterable) -> Layout:
    if not g.is_binary:
        raise FrameworkError("the framework needs a binary query")
    h = frozenset(h)
    if not h <= g.vertices:
        raise FrameworkError(f"{sorted(h - g.vertices)} not attributes of the query")
    light = frozenset(g.vertices - h)
    light_edges, cross_edges = [], []
    for e in g.sorted_edges():
        inside = e & light
        if len(e) == 2 and len(inside) == 2:
            light_edges.append(e)
        elif inside and inside != e:
            cross_edges.append(e)
    border = frozenset(x for e in cross_edges for x in e & light)
    # in a binary query a light attribute on no light edge sees only its unary residual
    touched_by_light = frozenset(x for e in light_edges for x in e)
    isolated = light - touched_by_light
    return Layout(h, light, tuple(light_edges), tuple(cross_edges), border, isolated)


@dataclass(frozen=True)
class ReducedQuery:
    origin: Configuration
    isolated: Mapping     # X in I -> unary Relation R''_X
    light_rels: Mapping   # light edge -> Relation R''_e
    l_set: frozenset
    i_set: frozenset
    border_rels: Mapping  # every border X -> R''_X (isolated or not)

    def isolated_product(self, j: Iterable | None = None) -> Relation:
        keys = sorted(self.i_set if j is None else j)
        return cartesian_oracle([self.isolated[x] for x in keys])

    def isolated_count(self, j: Iterable | None = None) -> int:
        n = 1
        for x in (self.i_set if j is None else j):
            n *= len(self.isolated[x])
        return n

    def light_join(self) -> Relation:
        return join_oracle(self.light_rels.values())

    def join(self) -> Relation:
        """Join(Q''(eta)) = isolated product x light join."""
        return join_oracle(list(self.isolated.values()) + list(self.light_rels.values()))


def semijoin_reduce(rq: ResidualQuery, g: Hypergraph, h: Iterable, lay: Layout | None = None) -> ReducedQuery:
    if not rq.feasible:
        raise FrameworkError(f"configuration {rq.origin} is infeasible")
    lay = lay or layout(g, h)
    border_rels = {}
    for x in sorted(lay.border):
        vals = None
        for e in lay.cross_at(x):
            got = {row[0] for row in rq.relations[e].rows}
            vals = got if vals is None else vals & got
        border_rels[x] = Relation((x,), frozenset((v,) for v in vals))
    allowed = {x: {row[0] for row in r.rows} for x, r in border_rels.items()}
    light = {}
    for e in lay.light_edges:
        r = rq.relations[e]
        checks = [(i, allowed[a]) for i, a in enumerate(r.scheme) if a in allowed]
        rows = frozenset(row for row in r.rows if all(row[i] in s for i, s in checks))
        light[e] = Relation(r.scheme, rows)
    isolated = {x: border_rels[x] for x in sorted(lay.i_set)}
    return ReducedQuery(rq.origin, isolated, light, lay.l_set, lay.i_set, border_rels)


def describe(lay: Layout) -> str:
    def names(es):
        return ",".join("".join(edge_key(e)) for e in es)
    return (f"H={sorted(lay.h_set)} L={sorted(lay.l_set)} I={sorted(lay.i_set)} "
            f"border={sorted(lay.border)} light=[{names(lay.light_edges)}] cross=[{names(lay.cross_edges)}]")
