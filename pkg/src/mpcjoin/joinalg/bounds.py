"""Exact checks of the isolated cartesian product bounds and their companions.

Every comparison of the form ``lhs <= lam**a * m**b`` with rational ``a`` is
decided in integers after raising both sides to the denominator of ``a``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .. import lp
from ..hypergraph import (Hypergraph, agm_bound, agm_holds, build_hypergraph, canonical_packing,
                          edge_cover_lp, edge_key, edge_packing_lp, is_covering, is_packing,
                          vertex_weight)
from ..relcore import JoinQuery, Relation, count_join, join_oracle
from ..taxonomy import (HeavyLightIndex, ResidualBuilder, candidate_subsets, classify,
                        config_mass_check, decompose_check, enumerate_configs)
from .framework import FrameworkError, Layout, ReducedQuery, layout, semijoin_reduce


@dataclass(frozen=True)
class BoundCheck:
    check: str
    h: tuple
    j: tuple
    lhs: int
    rhs: str
    holds: bool
    detail: str = ""

    def as_json(self) -> str:
        return json.dumps({"check": self.check, "H": list(self.h), "J": list(self.j),
                           "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds},
                          sort_keys=False)


def power_leq(lhs: int, lam: int, expo, m: int, m_expo: int) -> bool:
    """lhs <= lam**expo * m**m_expo, exactly."""
    expo = Fraction(expo)
    d = expo.denominator
    left = lhs ** d
    right = m ** (m_expo * d)
    if expo >= 0:
        right *= lam ** expo.numerator
    else:
        left *= lam ** (-expo.numerator)
    return left <= right


def _fmt_power(lam, expo, m, m_expo) -> str:
    return f"{lam}^({expo}) * {m}^{m_expo}"


def reduced_queries(q: JoinQuery, h: Iterable, idx: HeavyLightIndex, g: Hypergraph | None = None,
                    lay: Layout | None = None) -> list:
    """Q''(eta) for every configuration of H.

    Infeasible configurations are reduced too: the bounds range over all
    of config(Q, H), and R''_X is defined regardless of inside edges.
    """
    g = g or build_hypergraph(q)
    lay = lay or layout(g, h)
    builder = ResidualBuilder(q, h, idx)
    out = []
    for cfg in enumerate_configs(q, h, idx):
        rq = builder.residual(cfg)
        if not rq.feasible:
            rq = dataclasses.replace(rq, feasible=True)
        out.append(semijoin_reduce(rq, g, h, lay))
    return out


def _check_j(lay: Layout, j) -> tuple:
    j = frozenset(j)
    if not j:
        raise FrameworkError("J must be non-empty")
    if not j <= lay.i_set:
        raise FrameworkError(f"J={sorted(j)} is not a subset of I={sorted(lay.i_set)}")
    return tuple(sorted(j))


def isolated_sum(reduced: list, j) -> int:
    return sum(rq.isolated_count(j) for rq in reduced)


def isolated_bound_check(q: JoinQuery, h, w: Mapping, j, lam: int, idx: HeavyLightIndex | None = None,
                         reduced: list | None = None, label: str = "isolated-cp") -> BoundCheck:
    """sum_eta |Join(Q''_J(eta))| <= lam**(|H| - W_J) * m**|J| for a packing W."""
    g = build_hypergraph(q)
    if not is_packing(g, w):
        raise FrameworkError("W is not a fractional edge packing")
    lay = layout(g, h)
    jt = _check_j(lay, j)
    idx = idx or classify(q, lam)
    reduced = reduced if reduced is not None else reduced_queries(q, h, idx, g, lay)
    lhs = isolated_sum(reduced, jt)
    w_j = sum((vertex_weight(g, w, y) for y in jt), Fraction(0))
    expo = len(lay.h_set) - w_j
    holds = power_leq(lhs, lam, expo, q.m, len(jt))
    return BoundCheck(label, tuple(sorted(lay.h_set)), jt, lhs,
                      _fmt_power(lam, expo, q.m, len(jt)), holds, f"W_J={w_j}")


def weak_bound_check(q: JoinQuery, h, j, lam: int, idx: HeavyLightIndex | None = None,
                     reduced: list | None = None, rho=None) -> BoundCheck:
    """sum_eta |Join(Q''_J(eta))| <= lam**(2 rho - |J| - |L|) * m**|J|."""
    g = build_hypergraph(q)
    lay = layout(g, h)
    if not lay.i_set:
        return BoundCheck("weak-cp", tuple(sorted(lay.h_set)), (), 0, "n/a", True,
                          "no isolated attributes")
    jt = _check_j(lay, j)
    rho = Fraction(rho) if rho is not None else edge_cover_lp(g).optimum
    idx = idx or classify(q, lam)
    reduced = reduced if reduced is not None else reduced_queries(q, h, idx, g, lay)
    lhs = isolated_sum(reduced, jt)
    expo = 2 * rho - len(jt) - len(lay.l_set)
    holds = power_leq(lhs, lam, expo, q.m, len(jt))
    return BoundCheck("weak-cp", tuple(sorted(lay.h_set)), jt, lhs,
                      _fmt_power(lam, expo, q.m, len(jt)), holds, f"rho={rho}")


def build_qstar(q: JoinQuery, h, idx: HeavyLightIndex) -> JoinQuery:
    """Cross edges touching I, heavy values on each X in H, all values on each Y in I."""
    g = build_hypergraph(q)
    lay = layout(g, h)
    rels = []
    for e in lay.cross_edges:
        if e & lay.i_set:
            r = q.relation(e)
            rels.append(Relation(r.scheme, r.rows, "R*_" + "".join(r.scheme)))
    for x in sorted(lay.h_set):
        rels.append(Relation((x,), frozenset((v,) for v in idx.heavy_on(x)), f"R*_{x}"))
    for y in sorted(lay.i_set):
        vals = set()
        for r in q.relations:
            if y in r.scheme:
                vals |= r.values_on(y)
        rels.append(Relation((y,), frozenset((v,) for v in vals), f"R*_{y}"))
    return JoinQuery(tuple(rels))


def w_star(g: Hypergraph, lay: Layout, w: Mapping) -> dict:
    """Tight covering of the Q* hypergraph built from packing W."""
    out = {}
    binary = [e for e in lay.cross_edges if e & lay.i_set]
    for e in binary:
        out[e] = Fraction(w.get(e, 0))
    for v in sorted(lay.h_set | lay.i_set):
        out[frozenset((v,))] = 1 - sum((out[e] for e in binary if v in e), Fraction(0))
    return out


def w_star_check(q: JoinQuery, h, w: Mapping, idx: HeavyLightIndex) -> BoundCheck:
    """W* is a tight covering of G* and sums to |H| - W_I over H."""
    g = build_hypergraph(q)
    lay = layout(g, h)
    ws = w_star(g, lay, w)
    qs = build_qstar(q, h, idx)
    gs = Hypergraph.from_edges([r.scheme for r in qs.relations]) if qs.relations else None
    w_i = sum((vertex_weight(g, w, y) for y in lay.i_set), Fraction(0))
    over_h = sum((ws[frozenset((x,))] for x in lay.h_set), Fraction(0))
    tight = True
    if gs is not None:
        tight = (set(ws) == set(gs.edges) and is_covering(gs, ws)
                 and all(vertex_weight(gs, ws, v) == 1 for v in gs.vertices))
    holds = tight and over_h == len(lay.h_set) - w_i
    return BoundCheck("w-star", tuple(sorted(lay.h_set)), tuple(sorted(lay.i_set)),
                      0, f"sum_H W*={over_h}, |H|-W_I={len(lay.h_set) - w_i}", holds,
                      f"tight={tight}")


def qstar_containment(q: JoinQuery, h, idx: HeavyLightIndex, reduced: list) -> bool:
    """Every tuple of Join(Q''_isolated(eta)) x {eta} lies in Join(Q*).

    Q* constrains each Y in I only through cross edges to H and its own
    unary relation, so checking each factor value suffices.
    """
    g = build_hypergraph(q)
    lay = layout(g, h)
    by_edge = q.by_edge()
    for rq in reduced:
        eta = rq.origin.as_dict()
        if any(v not in idx.heavy_on(x) for x, v in eta.items()):
            return False
        for y, rel in rq.isolated.items():
            for (v,) in rel.rows:
                for e in lay.cross_at(y):
                    (z,) = e - {y}
                    r = by_edge[e]
                    row = tuple(v if a == y else eta[z] for a in r.scheme)
                    if row not in r.rows:
                        return False
    return True


def qstar_chain(q: JoinQuery, h, w: Mapping, lam: int, idx: HeavyLightIndex,
                reduced: list | None = None) -> list:
    """sum |Join(Q''_isolated)| <= |Join(Q*)| <= AGM(Q*, W*), plus containment and W*."""
    g = build_hypergraph(q)
    lay = layout(g, h)
    reduced = reduced if reduced is not None else reduced_queries(q, h, idx, g, lay)
    hs = tuple(sorted(lay.h_set))
    it = tuple(sorted(lay.i_set))
    lhs = sum(rq.isolated_count() for rq in reduced)
    qs = build_qstar(q, h, idx)
    star = count_join(qs)
    contained = qstar_containment(q, h, idx, reduced)
    out = [BoundCheck("qstar-contain", hs, it, lhs, str(star), lhs <= star and contained,
                      f"containment={contained}")]
    ws = w_star(g, lay, w)
    if qs.relations:
        gs = Hypergraph.from_edges([r.scheme for r in qs.relations])
        sizes = {frozenset(r.scheme): len(r) for r in qs.relations}
        ok = agm_holds(gs, ws, sizes, star)
        approx = agm_bound(gs, ws, sizes, digits=3)
        out.append(BoundCheck("qstar-agm", hs, it, star, f"{float(approx):.6g}", ok))
    else:
        out.append(BoundCheck("qstar-agm", hs, it, star, "1", star <= 1))
    out.append(w_star_check(q, h, w, idx))
    return out


def max_wj_packing(g: Hypergraph, j) -> dict:
    """A fractional edge packing maximizing W_J (the strongest bound for J)."""
    es = g.sorted_edges()
    vs = g.sorted_vertices()
    j = set(j)
    c = [sum(1 for v in e if v in j) for e in es]
    a = [[1 if v in e else 0 for e in es] for v in vs]
    sol = lp.maximize(c, a, [1] * len(vs))
    return dict(zip(es, sol.x))


def factorization_check(q: JoinQuery, h, idx: HeavyLightIndex) -> BoundCheck:
    """Join(Q'(eta)) = Join(Q''_isolated(eta)) x Join(Q''_light(eta)) for feasible eta."""
    g = build_hypergraph(q)
    lay = layout(g, h)
    builder = ResidualBuilder(q, h, idx)
    checked = 0
    bad = []
    for cfg in enumerate_configs(q, h, idx):
        rq = builder.residual(cfg)
        if not rq.feasible:
            continue
        red = semijoin_reduce(rq, g, h, lay)
        left = rq.join()
        right = join_oracle(list(red.isolated.values()) + list(red.light_rels.values()))
        checked += 1
        if left.rows != right.rows or left.scheme != right.scheme:
            bad.append(str(cfg))
    return BoundCheck("factorization", tuple(sorted(lay.h_set)), tuple(sorted(lay.i_set)),
                      checked, "all equal", not bad, "; ".join(bad[:3]))


def agm_check(q: JoinQuery, count: int | None = None) -> BoundCheck:
    g = build_hypergraph(q)
    cover = edge_cover_lp(g)
    sizes = {frozenset(r.scheme): len(r) for r in q.relations}
    n = count_join(q) if count is None else count
    ok = agm_holds(g, cover.weights, sizes, n)
    return BoundCheck("agm", (), (), n, f"{float(agm_bound(g, cover.weights, sizes, 3)):.6g}", ok,
                      f"rho={cover.optimum}")


def bound_suite(q: JoinQuery, lam: int, *, heavy_sets: Iterable | None = None,
                oracle: bool = True) -> list:
    """Every bound and structural identity for q at heavy parameter lam.

    Per H: the configuration-mass bound, the isolated bound for each non-empty J under
    the canonical packing, an LP packing and the W_J-maximizing packing,
    the weak bound, the Q*/W* chain, and (with ``oracle``) the residual
    factorization.  Globally: the disjoint decomposition and AGM.
    """
    g = build_hypergraph(q)
    rho = edge_cover_lp(g).optimum
    idx = classify(q, lam)
    canon = canonical_packing(g).weights
    lp_pack = edge_packing_lp(g).weights
    out = []
    subsets = list(heavy_sets) if heavy_sets is not None else candidate_subsets(q, idx)
    for h in subsets:
        h = tuple(sorted(h))
        lay = layout(g, h)
        lhs, rhs, ok = config_mass_check(q, h, idx)
        out.append(BoundCheck("config-mass", h, (), lhs, str(rhs), ok))
        reduced = reduced_queries(q, h, idx, g, lay)
        for j in lay.nonempty_subsets_of_i():
            packings = [("canonical", canon), ("lp", lp_pack), ("max-wj", max_wj_packing(g, j))]
            for name, w in packings:
                out.append(isolated_bound_check(q, h, w, j, lam, idx, reduced,
                                                label=f"isolated-cp[{name}]"))
            out.append(weak_bound_check(q, h, j, lam, idx, reduced, rho))
        out.extend(qstar_chain(q, h, canon, lam, idx, reduced))
        if oracle:
            out.append(factorization_check(q, h, idx))
    if oracle:
        rep = decompose_check(q, idx)
        out.append(BoundCheck("decomposition", (), (), rep.total, "disjoint union", rep.holds, str(rep)))
    out.append(agm_check(q))
    return out
