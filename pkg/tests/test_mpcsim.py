import pytest

from mpcjoin.mpcsim import Cluster, LoadReport, Message, SimulationError, init_cluster, rows_of
from mpcjoin.relcore import JoinQuery, relation


def _query(m):
    return JoinQuery((relation("AB", [(i, i) for i in range(m)]),))


def test_init_round_robin():
    c = init_cluster(1, _query(7))
    assert len(c.stores[0][("in", ("A", "B"))]) == 14
    c = init_cluster(4, _query(100))
    assert {len(s[("in", ("A", "B"))]) // 2 for s in c.stores} == {25}
    c = init_cluster(4, _query(10))
    held = [len(s[("in", ("A", "B"))]) // 2 for s in c.stores]
    assert set(held) <= {2, 3} and max(held) - min(held) <= 1


def test_all_to_one():
    c = Cluster(8)
    delta = c.run_round(lambda mid, store, ctx: [Message(0, [mid])])
    assert delta.total_load == 8 and delta.per_round[0][0] == 8


def test_silent_round():
    c = Cluster(3)
    assert c.run_round(lambda *a: ()).total_load == 0


def test_ring_shift():
    c = Cluster(4)
    for i in range(4):
        c.stores[i]["x"].extend(range(i + 1))

    def send(mid, store, ctx):
        return [Message((mid + 1) % ctx.p, list(store["x"]), "y")]

    assert c.run_round(send).total_load == 4


def test_broadcast():
    c = Cluster(5)
    d = c.broadcast(2, [1, 2, 3])
    assert d.per_round[0] == (3, 3, 0, 3, 3) and d.total_load == 3
    c = Cluster(4)
    d = c.run_round(lambda mid, store, ctx: [Message(x, [7, 7]) for x in range(ctx.p) if x != mid])
    assert d.per_round[0] == (6, 6, 6, 6)
    assert Cluster(1).broadcast(0, [1, 2]).total_load == 0


def test_report_totals():
    c = Cluster(4)
    c.charge([10, 3, 0, 0])
    c.charge([1, 7, 2, 0])
    assert c.load_report().total_load == 17 and c.load_report().rounds == 2
    assert Cluster(2).load_report().total_load == 0
    c = Cluster(5)
    c.charge([1, 2, 3, 42, 0])
    assert c.load_report().round_loads == [42]


def test_errors():
    with pytest.raises(SimulationError):
        Cluster(0)
    with pytest.raises(SimulationError):
        Message(0, [])
    c = Cluster(2)
    with pytest.raises(SimulationError):
        c.run_round(lambda mid, store, ctx: [Message(5, [1])])
    with pytest.raises(SimulationError):
        Cluster(3, schedule=[0, 0, 1])


def test_csv_roundtrip():
    c = Cluster(3)
    c.charge([1, 2, 3], "a")
    c.charge([0, 5, 0], "b")
    text = c.load_report().to_csv()
    assert text.splitlines()[0] == "round,machine,words_received"
    back = LoadReport.from_csv(text)
    assert back.per_round == c.load_report().per_round


def test_schedule_does_not_change_delivery():
    def send(mid, store, ctx):
        return [Message(0, [mid, ctx.p])]

    a, b = Cluster(4), Cluster(4, schedule=[3, 1, 2, 0])
    a.run_round(send)
    b.run_round(send)
    assert a.stores[0][None] == b.stores[0][None] == [0, 4, 1, 4, 2, 4, 3, 4]


def test_stores_are_read_only_in_compute():
    c = Cluster(2)

    def bad(mid, store, ctx):
        store["z"] = [1]
        return ()

    with pytest.raises(TypeError):
        c.run_round(bad)


def test_rows_of():
    assert rows_of([1, 2, 3, 4], 2) == [(1, 2), (3, 4)]
    assert rows_of([], 0) == []
