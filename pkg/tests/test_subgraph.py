import random
from itertools import combinations
from math import comb

import pytest

from mpcjoin.hypergraph import build_hypergraph, edge_cover_lp, Hypergraph
from mpcjoin.shapes import SHAPES, UnknownShape
from mpcjoin.subgraph import (DataGraph, PatternError, PatternGraph, automorphisms,
                              enumerate_embeddings, pattern_to_query, read_edge_list,
                              read_pattern, write_edge_list)

from oracles import backtrack_embeddings, count_subgraphs

TRI = [(1, 2), (2, 3), (1, 3)]


def test_triangle_homomorphisms():
    res = enumerate_embeddings(PatternGraph.named("triangle"), DataGraph.from_pairs(TRI))
    assert len(res) == 6


def test_single_edge_is_directed_edge_set():
    g = DataGraph.from_pairs([(1, 2), (2, 3), (5, 9)])
    q = pattern_to_query(PatternGraph.named("edge"), g)
    assert len(q.relations[0]) == 2 * len(g)
    assert len(enumerate_embeddings(PatternGraph.named("edge"), g, 4)) == 2 * len(g)


def test_path_on_star():
    star = DataGraph.from_pairs([(0, 1), (0, 2), (0, 3)])
    res = enumerate_embeddings(PatternGraph.named("path3"), star, 4, mode="injective")
    assert len(res) == 6
    assert all(row[1] == 0 for row in res.rows)


def test_k4_triangles_dedup():
    k4 = DataGraph.from_pairs(combinations(range(4), 2))
    res = enumerate_embeddings(PatternGraph.named("triangle"), k4, 8, mode="injective", dedup=True)
    assert len(res) == 4


def test_cycle_on_cycle():
    c4 = DataGraph.from_pairs([(0, 1), (1, 2), (2, 3), (3, 0)])
    res = enumerate_embeddings(PatternGraph.named("cycle4"), c4, 4, mode="injective", dedup=True)
    assert len(res) == 1


def test_automorphism_counts():
    assert len(automorphisms(PatternGraph.named("triangle"))) == 6
    assert len(automorphisms(PatternGraph.named("path3"))) == 2
    assert len(automorphisms(PatternGraph.named("cycle4"))) == 8
    assert len(automorphisms(PatternGraph.named("clique4"))) == 24


def test_query_has_pattern_rho():
    for name in ("path3", "triangle", "cycle4", "clique4"):
        pat = PatternGraph.named(name)
        q = pattern_to_query(pat, DataGraph.from_pairs(TRI))
        assert edge_cover_lp(build_hypergraph(q)).optimum == \
            edge_cover_lp(Hypergraph.from_edges(pat.edges)).optimum


def test_pattern_validation():
    with pytest.raises(PatternError, match="without edges"):
        PatternGraph(("A", "B", "Z"), (("A", "B"),))
    with pytest.raises(PatternError, match="connected"):
        PatternGraph((), (("A", "B"), ("C", "D")))
    with pytest.raises(PatternError, match="self-loop"):
        PatternGraph((), (("A", "A"),))
    with pytest.raises(PatternError, match="at most"):
        PatternGraph((), tuple((f"V{i}", f"V{i + 1}") for i in range(6)))
    with pytest.raises(UnknownShape):
        PatternGraph.named("star")
    with pytest.raises(PatternError):
        enumerate_embeddings(PatternGraph.named("edge"), DataGraph.from_pairs(TRI), mode="nope")


def test_empty_graph():
    res = enumerate_embeddings(PatternGraph.named("triangle"), DataGraph.from_pairs([]))
    assert len(res) == 0 and res.report.total_load == 0


def test_self_loops_dropped():
    g = DataGraph.from_pairs([(1, 1), (1, 2)])
    assert g.edges == {(1, 2)}


def test_edge_list_io(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# comment\n3 1\n\n1 2\n")
    g = read_edge_list(p)
    assert g.edges == {(1, 3), (1, 2)}
    write_edge_list(tmp_path / "h.txt", g)
    assert (tmp_path / "h.txt").read_text() == "1 2\n1 3\n"
    p.write_text("1 x\n")
    with pytest.raises(PatternError):
        read_edge_list(p)


def test_pattern_from_file(tmp_path):
    p = tmp_path / "pat.txt"
    p.write_text("a b\nb c\nc a\n")
    assert len(read_pattern(str(p)).edges) == 3
    assert read_pattern("cycle4").vertices == tuple("ABCD")
    with pytest.raises(PatternError):
        read_pattern(str(tmp_path / "missing.txt"))


@pytest.mark.parametrize("name", ["path3", "triangle", "cycle4", "clique4"])
def test_against_backtracking(name):
    rng = random.Random(hash(name) % 1000)
    pairs = [(u, v) for u, v in combinations(range(14), 2) if rng.random() < 0.35]
    g = DataGraph.from_pairs(pairs)
    pat = PatternGraph.named(name)
    hom = enumerate_embeddings(pat, g, 8, seed=1)
    assert hom.rows == set(backtrack_embeddings(pat.edges, pairs, injective=False))
    inj = enumerate_embeddings(pat, g, 8, seed=1, mode="injective")
    assert inj.rows == set(backtrack_embeddings(pat.edges, pairs, injective=True))
    ded = enumerate_embeddings(pat, g, 8, seed=1, mode="injective", dedup=True)
    assert len(ded) == count_subgraphs(pat.edges, pairs)


def test_kn_triangles():
    for n in range(4, 7):
        g = DataGraph.from_pairs(combinations(range(n), 2))
        res = enumerate_embeddings(PatternGraph.named("triangle"), g, 4, mode="injective", dedup=True)
        assert len(res) == comb(n, 3)
