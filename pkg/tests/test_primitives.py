import random
from math import isqrt

import pytest

from mpcjoin.datagen import generate_data
from mpcjoin.mpcsim import Cluster
from mpcjoin.primitives import (PrimitiveError, OneRound, check_skew_free, compose, compose_products,
                                fit_shares, grid_algorithm, grid_cartesian, hypercube_algorithm,
                                hypercube_join, local_join, merge_product, plan_grid, run_one_round)
from mpcjoin.relcore import JoinQuery, cartesian_oracle, join_oracle, relation


def unary(name, n, offset=0):
    return relation((name,), [(offset + i,) for i in range(n)])


def test_local_join_matches_oracle():
    rng = random.Random(3)
    rels = [relation(e, {(rng.randrange(9), rng.randrange(9)) for _ in range(40)})
            for e in ("AB", "BC", "AC", "CD")]
    scheme, rows = local_join(rels)
    assert scheme == ("A", "B", "C", "D") and rows == join_oracle(rels).rows


def test_merge_product():
    s, rows = merge_product(("A",), {(1,), (2,)}, ("B",), {(5,)})
    assert s == ("A", "B") and rows == {(1, 5), (2, 5)}


def test_plan_grid_examples():
    plan = plan_grid([100, 100], 4)
    assert plan.thresholds[1] == 50 and plan.t_prime == 2 and plan.dims == (2, 2)
    plan = plan_grid([40], 8)
    assert plan.t_prime == 1 and plan.dims == (8,)
    plan = plan_grid([100, 1], 100)
    assert plan.thresholds[1] == 1 and plan.t_prime == 2
    with pytest.raises(PrimitiveError):
        plan_grid([1, 5], 4)


def test_grid_two_by_two():
    c = Cluster(4)
    r1, r2 = unary("A", 2, 1), unary("B", 2, 10)
    delta, plan = grid_cartesian(c, [r1, r2])
    assert plan.dims == (2, 2)
    assert delta.per_round[0] == (2, 2, 2, 2)
    outs = [o for o in c.outputs if o]
    assert len(outs) == 4 and all(len(o) == 1 for o in outs)
    assert c.collected() == cartesian_oracle([r1, r2]).rows


def test_grid_single_machine():
    c = Cluster(1)
    rels = [unary("A", 3), unary("B", 5)]
    delta, _ = grid_cartesian(c, rels)
    assert delta.total_load == 8 and c.collected() == cartesian_oracle(rels).rows


def test_grid_three_unary():
    c = Cluster(8)
    rels = [unary(x, 4) for x in "ABC"]
    delta, plan = grid_cartesian(c, rels)
    assert plan.dims == (2, 2, 2)
    assert set(delta.per_round[0]) == {6}
    assert len(c.collected()) == 64 and c.collected() == cartesian_oracle(rels).rows


def test_grid_broadcasts_small_relation():
    c = Cluster(16)
    rels = [unary("A", 64), unary("B", 64), unary("C", 2)]
    delta, plan = grid_cartesian(c, rels)
    assert plan.t_prime == 2
    assert c.collected() == cartesian_oracle(rels).rows


def test_grid_needs_disjoint():
    with pytest.raises(PrimitiveError):
        grid_algorithm([unary("A", 2), unary("A", 3, 5)], 4)


def _place(rel):
    ids = {row: i for i, row in enumerate(rel.sorted_rows())}

    def finish(got):
        return rel.scheme, set(got.get(0, ()))

    return OneRound(len(rel), lambda i, row: [ids[row]], finish, [rel])


def test_compose_trivial():
    a, b = unary("A", 2), unary("B", 2, 5)
    c = Cluster(4)
    compose_products(c, _place(a), _place(b), size=4)
    assert all(len(o) == 1 for o in c.outputs)
    assert c.collected() == cartesian_oracle([a, b]).rows


def test_compose_with_empty_side():
    a = unary("A", 2)
    empty = relation(("B",), [])
    alg2 = OneRound(1, lambda i, row: [0], lambda got: (("B",), set(got.get(0, ()))), [empty])
    c = Cluster(2)
    delta = compose_products(c, _place(a), alg2)
    assert c.collected() == set() and delta.total_load > 0


def test_compose_join_with_unary():
    q = generate_data("triangle", 200, "uniform", 4)
    u = unary("Z", 5)
    alg1 = hypercube_algorithm(q.relations, {"A": 2, "B": 2, "C": 1}, 1)
    alg2 = grid_algorithm([u], 2)
    c = Cluster(8)
    compose_products(c, alg1, alg2)
    expected = cartesian_oracle([join_oracle(q), u])
    assert c.collected() == expected.rows


def test_skew_free_examples():
    q = generate_data("triangle", 300, "uniform", 1)
    assert check_skew_free(q, {"A": 1, "B": 1, "C": 1})
    mono = JoinQuery((relation("AB", [(7, i) for i in range(10)]),))
    assert not check_skew_free(mono, {"A": 2, "B": 1})


def test_hypercube_replication():
    q = generate_data("triangle", 90, "uniform", 2)
    c = Cluster(8)
    delta = hypercube_join(c, q, {"A": 2, "B": 2, "C": 2}, 5)
    assert sum(delta.per_round[0]) == 2 * 2 * q.m
    assert c.collected() == join_oracle(q).rows


def test_hypercube_single_value():
    q = JoinQuery(tuple(relation(e, [(1, 1)]) for e in ("AB", "BC", "AC")))
    c = Cluster(1)
    hypercube_join(c, q, {"A": 1, "B": 1, "C": 1}, 0)
    assert c.collected() == {(1, 1, 1)}


@pytest.mark.parametrize("seed", range(10))
def test_hypercube_matches_oracle(seed):
    q = generate_data("triangle", 600, "uniform", seed)
    c = Cluster(8)
    hypercube_join(c, q, {"A": 2, "B": 2, "C": 2}, seed)
    assert c.collected() == join_oracle(q).rows


def test_hypercube_errors():
    q = generate_data("triangle", 30, "uniform", 0)
    with pytest.raises(PrimitiveError):
        hypercube_algorithm(q.relations, {"A": 2}, 0)
    with pytest.raises(PrimitiveError):
        hypercube_join(Cluster(4), q, {"A": 2, "B": 2, "C": 2}, 0)


def test_slice_overflow():
    with pytest.raises(PrimitiveError):
        run_one_round(Cluster(2), _place(unary("A", 3)))


def test_fit_shares_respects_budget():
    sizes = {("A", "B"): 100, ("B", "C"): 100, ("A", "C"): 100}
    sh = fit_shares(["A", "B", "C"], sizes, 8, 27)
    prod = sh["A"] * sh["B"] * sh["C"]
    assert prod <= 27 and sh == {"A": 3, "B": 3, "C": 3}
    assert fit_shares([], sizes, 4, 4) == {}
    assert max(fit_shares(["A", "B"], {("A", "B"): 5}, 2, 100).values()) == 2


def test_grid_load_formula_small():
    n, p = 400, 16
    c = Cluster(p)
    rels = [relation(("A", "B"), [(i, i) for i in range(n)]), relation(("C", "D"), [(i, i) for i in range(n)])]
    delta, plan = grid_cartesian(c, rels)
    assert delta.total_load <= 4 * n // isqrt(p)
    assert len(c.collected()) == n * n
