from fractions import Fraction

import pytest

from mpcjoin.datagen import generate_data
from mpcjoin.hypergraph import build_hypergraph, canonical_packing, edge_cover_lp
from mpcjoin.joinalg import (FrameworkError, JoinAlgorithmError, build_histogram, choose_lambda,
                             layout, semijoin_reduce, solve_join, step3_constant, step3_demand)
from mpcjoin.joinalg.bounds import (bound_suite, build_qstar, isolated_bound_check, qstar_chain,
                                    weak_bound_check)
from mpcjoin.joinalg.framework import describe
from mpcjoin.joinalg.stats import step1_allocation
from mpcjoin.relcore import JoinQuery, Relation, join_oracle, relation
from mpcjoin.shapes import shape_hypergraph
from mpcjoin.taxonomy import Configuration, ResidualBuilder, classify, residual_query

from helpers import planted_fig1a

FIG_H = ("D", "E", "F", "K")


# ---------------------------------------------------------------- framework

def test_fig1a_layout():
    lay = layout(shape_hypergraph("fig1a"), FIG_H)
    assert lay.i_set == frozenset("GHL")
    assert lay.border == lay.l_set - {"J"}
    assert frozenset("AB") in lay.light_edges and frozenset("AD") in lay.cross_edges
    assert frozenset("DK") not in lay.light_edges + lay.cross_edges
    assert "I=['G', 'H', 'L']" in describe(lay)


def test_empty_h_layout():
    g = shape_hypergraph("triangle")
    lay = layout(g, ())
    assert not lay.cross_edges and not lay.i_set and len(lay.light_edges) == 3
    q = generate_data("triangle", 300, "uniform", 0)
    idx = classify(q, 2)
    rq = residual_query(q, Configuration((), ()), idx)
    red = semijoin_reduce(rq, g, ())
    assert red.isolated == {} and {e: r.rows for e, r in red.light_rels.items()} == \
        {e: r.rows for e, r in rq.relations.items()}


def test_layout_rejects_non_binary():
    from mpcjoin.hypergraph import Hypergraph
    with pytest.raises(FrameworkError):
        layout(Hypergraph.from_edges(["ABC"]), ())


def test_fig1a_semijoin_example():
    q = planted_fig1a(1)
    idx = classify(q, 8)
    assert all(idx.is_heavy(x, 0) for x in FIG_H)
    cfg = Configuration(FIG_H, (0, 0, 0, 0))
    rq = residual_query(q, cfg, idx)
    red = semijoin_reduce(rq, build_hypergraph(q), FIG_H)
    a_d = {v for (v,) in rq.relations[frozenset("AD")].rows}
    a_e = {v for (v,) in rq.relations[frozenset("AE")].rows}
    assert {v for (v,) in red.border_rels["A"].rows} == a_d & a_e
    assert set(red.isolated) == set("GHL")
    assert set(red.light_rels) == {frozenset(e) for e in ("AB", "AC", "BC", "IJ")}
    # the residual join factors into the isolated product times the light join
    assert rq.join().rows == red.join().rows


def test_reduce_rejects_infeasible():
    r = relation("AB", [(1, i) for i in range(4)] + [(2, 9)])
    q = JoinQuery((r, relation("BC", [(0, 5), (9, 5)])))
    idx = classify(q, 5)
    cfg = Configuration(("A", "B"), (2, 0))
    with pytest.raises(FrameworkError):
        semijoin_reduce(residual_query(q, cfg, idx), build_hypergraph(q), ("A", "B"))


# ---------------------------------------------------------------- stats

def test_choose_lambda():
    assert choose_lambda(64, Fraction(3, 2)) == 4
    assert choose_lambda(1, 5) == 1
    assert choose_lambda(64, Fraction(13, 2)) == 2
    with pytest.raises(ValueError):
        choose_lambda(0, 1)


def test_histogram_single_value():
    r = relation("AB", [(5, i) for i in range(50)])
    q = JoinQuery((r,))
    idx = classify(q, 2)
    h = build_histogram(q, 4, 1, idx)
    assert h.records[(("A", "B"), "A", 5)] == 50
    assert not any(k[1] == "B" for k in h.records)


def test_histogram_all_distinct():
    r = relation("AB", [(i, i) for i in range(40)])
    q = JoinQuery((r,))
    h = build_histogram(q, 4, 1, classify(q, 2))
    assert list(h.records) == [(("A", "B"), None, None)]
    assert h.light_count(("A", "B")) == 40


def test_histogram_recount():
    q = generate_data("triangle", 900, "zipf(1.3)", 2)
    rho = edge_cover_lp(build_hypergraph(q)).optimum
    h = build_histogram(q, 8, rho, classify(q, 4))
    for (scheme, a, v), n in h.records.items():
        if a is None:
            continue
        r = q.relation(scheme)
        i = r.scheme.index(a)
        assert n == sum(1 for row in r.rows if row[i] == v)


def test_step1_single_config():
    alloc, raw = step1_allocation({"eta": 1000}, 64, 4, 3, 1000, c1=1)
    assert alloc["eta"] == 16  # p / lam**(k-2)
    alloc, _ = step1_allocation({"eta": 1000}, 64, 4, 3, 1000)
    assert alloc["eta"] == 64


def test_step3_without_isolated():
    c2 = step3_constant(4, 3, 64, 0)
    assert c2 == Fraction(1)
    assert step3_demand(4, Fraction(3, 2), 1000, 64, 2, []) == 16


def test_step3_sums_stay_within_p():
    for seed in range(3):
        q = generate_data("triangle", 3000, "planted-heavy(0.3)", seed)
        res = solve_join(q, 64, seed=seed, lam=4)
        for h, (raw1, fin1, raw3, fin3) in res.info.sums.items():
            assert fin1 <= 64 and raw3 <= 64, (h, res.info.sums)


# ---------------------------------------------------------------- algorithm

@pytest.mark.parametrize("p", [1, 4, 8, 16, 64])
def test_triangle_matches_oracle(p):
    q = generate_data("triangle", 300, "uniform", 3)
    res = solve_join(q, p, seed=1)
    assert res.relation.rows == join_oracle(q).rows


def test_empty_relation_gives_empty_output():
    q = JoinQuery((relation("AB", [(1, 2)]), relation("BC", [])))
    res = solve_join(q, 4)
    assert res.relation.rows == frozenset()


def test_fig1a_random():
    q = generate_data("fig1a", 2000, "uniform", 5)
    res = solve_join(q, 16, seed=5)
    assert res.relation.rows == join_oracle(q).rows
    assert res.report.total_load > 0


def test_fig1a_planted_runs_heavy_paths():
    q = planted_fig1a(2)
    res = solve_join(q, 16, seed=2, lam=8)
    assert res.relation.rows == join_oracle(q).rows
    assert any(len(h) == 4 for h in res.info.plans)


def test_solve_rejects():
    with pytest.raises(JoinAlgorithmError):
        solve_join(JoinQuery((relation("ABC", [(1, 2, 3)]),)), 4)
    with pytest.raises(JoinAlgorithmError):
        solve_join(JoinQuery(()), 4)
    with pytest.raises(JoinAlgorithmError):
        solve_join(generate_data("edge", 10, "uniform", 0), 0)


def test_lambda_override_is_clamped():
    q = generate_data("path3", 50, "uniform", 1)
    res = solve_join(q, 4, lam=10 ** 6)
    assert res.info.lam == q.m and res.relation.rows == join_oracle(q).rows


# ---------------------------------------------------------------- bounds

def test_isolated_bound_zero_packing_is_naive():
    q = planted_fig1a(0)
    g = build_hypergraph(q)
    zero = {e: Fraction(0) for e in g.edges}
    chk = isolated_bound_check(q, FIG_H, zero, "GHL", 8)
    assert chk.rhs == f"8^(4) * {q.m}^3" and chk.holds


def test_fig1a_isolated_and_weak():
    q = planted_fig1a(3)
    g = build_hypergraph(q)
    canon = canonical_packing(g).weights
    chk = isolated_bound_check(q, FIG_H, canon, "GHL", 8)
    assert chk.holds and chk.lhs > 0
    assert weak_bound_check(q, FIG_H, "GHL", 8).holds


def test_weak_bound_without_isolated():
    q = generate_data("triangle", 300, "planted-heavy(0.5)", 1)
    chk = weak_bound_check(q, ("C",), (), 2)
    assert chk.holds and chk.detail == "no isolated attributes"


def test_star_weak_bound():
    q = generate_data("star", 600, "planted-heavy(0.4)", 1)
    idx = classify(q, 4)
    assert idx.heavy_on("A")
    chk = weak_bound_check(q, ("A",), "BCD", 4, idx)
    assert chk.holds and chk.lhs > 0


def test_qstar_fig1a_hypergraph():
    q = planted_fig1a(0)
    idx = classify(q, 8)
    qs = build_qstar(q, FIG_H, idx)
    names = sorted("".join(r.scheme) for r in qs.relations)
    assert names == sorted(["DG", "FG", "GK", "EH", "EL", "D", "E", "F", "K", "G", "H", "L"])


def test_qstar_without_isolated():
    q = generate_data("triangle", 300, "planted-heavy(0.5)", 1)
    idx = classify(q, 2)
    qs = build_qstar(q, ("A",), idx)
    assert [r.scheme for r in qs.relations] == [("A",)]


def test_qstar_chain_holds():
    q = planted_fig1a(4)
    idx = classify(q, 8)
    canon = canonical_packing(build_hypergraph(q)).weights
    assert all(c.holds for c in qstar_chain(q, FIG_H, canon, 8, idx))


@pytest.mark.parametrize("shape", ["star", "triangle", "path3", "cycle4"])
def test_bound_suite_planted(shape):
    q = generate_data(shape, 600, "planted-heavy(0.4)", 0)
    for lam in (2, 4, 8):
        checks = bound_suite(q, lam)
        assert all(c.holds for c in checks), [c for c in checks if not c.holds]


def test_bound_suite_fig1a_planted():
    q = planted_fig1a(5, base_m=400)
    checks = bound_suite(q, 8, heavy_sets=[(), FIG_H, ("D", "K")])
    assert any(c.check.startswith("isolated-cp") and c.lhs > 0 for c in checks)
    assert all(c.holds for c in checks)
