"""Query hypergraphs and their fractional edge covering/packing numbers.

All numbers are exact ``Fraction`` values computed by the rational simplex in
:mod:`mpcjoin.lp`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import lcm
from typing import Iterable, Mapping

from . import lp

Edge = frozenset
WeightFn = dict  # Edge -> Fraction

MAX_QUASI_VERTICES = 20


class HypergraphError(ValueError):
    pass


def edge_key(e) -> tuple:
    return tuple(sorted(e))


@dataclass(frozen=True)
class Hypergraph:
    vertices: frozenset
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", frozenset(frozenset(e) for e in self.edges))
        for e in self.edges:
            if not e:
                raise HypergraphError("empty edge")
            if not e <= self.vertices:
                raise HypergraphError(f"edge {edge_key(e)} uses unknown vertices")
        touched = frozenset().union(*self.edges) if self.edges else frozenset()
        loose = self.vertices - touched
        if loose:
            raise HypergraphError(f"vertices without incident edge: {sorted(loose)}")

    @classmethod
    def from_edges(cls, edges: Iterable[Iterable]) -> "Hypergraph":
        es = [frozenset(e) for e in edges]
        return cls(frozenset().union(*es) if es else frozenset(), frozenset(es))

    def sorted_vertices(self) -> list:
        return sorted(self.vertices)

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=lambda e: (len(e), edge_key(e)))

    def incident(self, x) -> list:
        return [e for e in self.sorted_edges() if x in e]

    @property
    def is_binary(self) -> bool:
        return all(len(e) == 2 for e in self.edges)

    def __repr__(self):
        es = ", ".join("".join(map(str, edge_key(e))) for e in self.sorted_edges())
        return f"Hypergraph(V={self.sorted_vertices()}, E=[{es}])"


@dataclass(frozen=True)
class LpResult:
    """Optimum of a covering/packing program plus a certifying weight function.

    For :func:`quasi_packing_number` ``zero_set`` carries the maximizing vertex
    set U rather than zero-weight vertices.
    """

    optimum: Fraction
    weights: dict
    zero_set: frozenset | None = None


def build_hypergraph(query) -> Hypergraph:
    """Hypergraph of a join query: one vertex per attribute, one edge per scheme."""
    schemes = [frozenset(r.scheme) for r in query.relations]
    if len(set(schemes)) != len(schemes):
        raise HypergraphError("query is not simple: repeated scheme")
    return Hypergraph.from_edges(schemes)


def induced_subgraph(g: Hypergraph, u) -> Hypergraph:
    u = frozenset(u)
    if not u <= g.vertices:
        raise HypergraphError(f"{sorted(u - g.vertices)} not in hypergraph")
    edges = {e & u for e in g.edges} - {frozenset()}
    return Hypergraph(u, frozenset(edges))


def vertex_weight(g: Hypergraph, w: Mapping, x) -> Fraction:
    if x not in g.vertices:
        raise HypergraphError(f"unknown vertex {x!r}")
    return sum((Fraction(w.get(e, 0)) for e in g.edges if x in e), Fraction(0))


def total_weight(w: Mapping) -> Fraction:
    return sum((Fraction(v) for v in w.values()), Fraction(0))


def _in_range(g, w):
    return all(0 <= Fraction(w.get(e, 0)) <= 1 for e in g.edges)


def is_covering(g: Hypergraph, w: Mapping) -> bool:
    return _in_range(g, w) and all(vertex_weight(g, w, x) >= 1 for x in g.vertices)


def is_packing(g: Hypergraph, w: Mapping) -> bool:
    return _in_range(g, w) and all(vertex_weight(g, w, x) <= 1 for x in g.vertices)


def _incidence(g):
    vs = g.sorted_vertices()
    es = g.sorted_edges()
    return vs, es, [[1 if v in e else 0 for e in es] for v in vs]


def edge_cover_lp(g: Hypergraph) -> LpResult:
    if not g.edges:
        raise HypergraphError("empty hypergraph")
    vs, es, inc = _incidence(g)
    sol = lp.maximize([-1] * len(es), [[-a for a in row] for row in inc], [-1] * len(vs))
    w = dict(zip(es, sol.x))
    return LpResult(-sol.value, w)


def edge_packing_lp(g: Hypergraph) -> LpResult:
    if not g.edges:
        raise HypergraphError("empty hypergraph")
    vs, es, inc = _incidence(g)
    sol = lp.maximize([1] * len(es), inc, [1] * len(vs))
    return LpResult(sol.value, dict(zip(es, sol.x)))


def _max_bipartite_matching(adj: dict) -> dict:
    # Kuhn's augmenting paths; adj maps left vertex -> ordered right neighbours
    match_r = {}

    def augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_r or augment(match_r[v], seen):
                match_r[v] = u
                return True
        return False

    for u in adj:
        augment(u, set())
    return {u: v for v, u in match_r.items()}


def canonical_packing(g: Hypergraph) -> LpResult:
    """Maximum fractional edge packing whose vertex weights are all 0 or 1.

    Built from a maximum matching of the bipartite double cover: matched arcs
    u->v give a half-integral packing made of directed paths and cycles.  Even
    cycles and odd-vertex paths are rewritten as alternating integral matchings
    (a path keeps one endpoint unsaturated); odd cycles keep weight 1/2.
    """
    if not g.edges:
        raise HypergraphError("empty hypergraph")
    if not g.is_binary:
        raise HypergraphError("canonical packing needs a binary hypergraph")
    vs = g.sorted_vertices()
    nbrs = {v: sorted(u for e in g.edges if v in e for u in e if u != v) for v in vs}
    succ = _max_bipartite_matching(nbrs)  # u -> v means arc u->v
    pred = {v: u for u, v in succ.items()}

    half = Fraction(1, 2)
    w = {e: Fraction(0) for e in g.edges}
    seen = set()

    def alternate(seq, closed):
        pairs = list(zip(seq, seq[1:] + (seq[:1] if closed else [])))
        for a, b in pairs[::2]:
            w[frozenset((a, b))] = Fraction(1)

    for start in vs:
        if start in seen or (start not in succ and start not in pred):
            continue
        # walk back to a path head, or detect a cycle
        head = start
        while head in pred and pred[head] != start:
            head = pred[head]
            if head == start:
                break
        seq = [head]
        cur = head
        while cur in succ and succ[cur] != head:
            cur = succ[cur]
            seq.append(cur)
        closed = cur in succ and succ[cur] == head
        seen.update(seq)
        if closed and len(seq) == 2:
            w[frozenset(seq)] = Fraction(1)
        elif closed and len(seq) % 2 == 1:
            for a, b in zip(seq, seq[1:] + seq[:1]):
                w[frozenset((a, b))] = half
        else:
            # even cycle, or a path (odd vertex count on a maximum matching)
            alternate(seq, closed)

    tau = edge_packing_lp(g).optimum
    rho = edge_cover_lp(g).optimum
    z = frozenset(x for x in vs if vertex_weight(g, w, x) == 0)
    if total_weight(w) != tau or len(z) != rho - tau:
        raise AssertionError("canonical packing construction failed validation")
    if any(vertex_weight(g, w, x) not in (0, 1) for x in vs):
        raise AssertionError("canonical packing has a fractional vertex weight")
    return LpResult(tau, w, z)


def remove_vertices(g: Hypergraph, u) -> Hypergraph | None:
    """G with U deleted from every edge (None when nothing remains)."""
    u = frozenset(u)
    edges = {e - u for e in g.edges} - {frozenset()}
    if not edges:
        return None
    return Hypergraph(g.vertices - u, frozenset(edges))


@lru_cache(maxsize=4096)
def _packing_value(edges: frozenset) -> tuple:
    res = edge_packing_lp(Hypergraph.from_edges(edges))
    return res.optimum, tuple(sorted(((edge_key(e), v) for e, v in res.weights.items())))


def quasi_packing_number(g: Hypergraph) -> LpResult:
    """max over U of tau(G minus U); ``zero_set`` holds the maximizing U."""
    if len(g.vertices) > MAX_QUASI_VERTICES:
        raise HypergraphError(f"too large: {len(g.vertices)} vertices > {MAX_QUASI_VERTICES}")
    vs = g.sorted_vertices()
    best = None
    for r in range(len(vs) + 1):
        for u in combinations(vs, r):
            rest = remove_vertices(g, u)
            if rest is None:
                continue
            val, weights = _packing_value(rest.edges)
            if best is None or val > best[0]:
                best = (val, weights, frozenset(u))
    val, weights, u = best
    return LpResult(val, {frozenset(k): v for k, v in weights}, u)


def _exponents(g, w):
    den = lcm(*(Fraction(w.get(e, 0)).denominator for e in g.edges)) if g.edges else 1
    return den, {e: int(Fraction(w.get(e, 0)) * den) for e in g.edges}


def iroot_ceil(n: int, k: int) -> int:
    """Smallest integer r with r**k >= n (n >= 0, k >= 1)."""
    if n < 0 or k < 1:
        raise ValueError("iroot_ceil needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    r = 1 << -(-n.bit_length() // k)  # r**k >= n
    # Newton descent from above
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r ** k < n:
        r += 1
    while r > 0 and (r - 1) ** k >= n:
        r -= 1
    return r


def agm_bound(g: Hypergraph, w: Mapping, sizes: Mapping, digits: int = 6) -> Fraction:
    """prod sizes(e)**w(e), rounded up to a multiple of 10**-digits.

    The result is never below the true product and exceeds it by less than
    10**-digits.  Use :func:`agm_holds` for exact comparisons.
    """
    if not is_covering(g, w):
        raise HypergraphError("weights are not a fractional edge covering")
    den, num = _exponents(g, w)
    prod = 1
    for e in g.edges:
        s = int(sizes[e])
        if s < 0:
            raise HypergraphError("negative relation size")
        prod *= s ** num[e]
    scale = 10 ** digits
    return Fraction(iroot_ceil(prod * scale ** den, den), scale)


def agm_holds(g: Hypergraph, w: Mapping, sizes: Mapping, count: int) -> bool:
    """Exact test of count <= prod sizes(e)**w(e)."""
    if not is_covering(g, w):
        raise HypergraphError("weights are not a fractional edge covering")
    den, num = _exponents(g, w)
    prod = 1
    for e in g.edges:
        prod *= int(sizes[e]) ** num[e]
    return count ** den <= prod
