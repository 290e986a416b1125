"""Relations, join queries and brute-force join oracles.

Attributes are plain strings and values are unsigned 64-bit integers.  A
relation keeps its scheme sorted and its rows as a frozenset of value tuples
aligned to that scheme, so equality and hashing are canonical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

MAX_VALUE = 2**64 - 1


class RelationError(ValueError):
    pass


@dataclass(frozen=True)
class Relation:
    scheme: tuple
    rows: frozenset
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        scheme = tuple(self.scheme)
        if len(set(scheme)) != len(scheme):
            raise RelationError(f"duplicate attribute in scheme {scheme}")
        rows = self.rows
        order = sorted(range(len(scheme)), key=lambda i: scheme[i])
        if order != list(range(len(scheme))):
            rows = (tuple(r[i] for i in order) for r in rows)
            scheme = tuple(scheme[i] for i in order)
        rows = frozenset(tuple(r) for r in rows)
        for r in rows:
            if len(r) != len(scheme):
                raise RelationError(f"row {r} does not match scheme {scheme}")
        object.__setattr__(self, "scheme", scheme)
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.sorted_rows())

    def __contains__(self, row):
        return tuple(row) in self.rows

    @property
    def schema_set(self) -> frozenset:
        return frozenset(self.scheme)

    def sorted_rows(self) -> list:
        return sorted(self.rows)

    def column(self, attr) -> int:
        try:
            return self.scheme.index(attr)
        except ValueError:
            raise RelationError(f"{attr!r} not in scheme {self.scheme}") from None

    def values_on(self, attr) -> set:
        i = self.column(attr)
        return {r[i] for r in self.rows}

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.scheme, r)) for r in self.sorted_rows()]

    def __repr__(self):
        label = self.name or "R_" + "".join(map(str, self.scheme))
        return f"<{label} {self.scheme} |{len(self.rows)}|>"


def relation(scheme: Sequence, rows: Iterable, name: str | None = None) -> Relation:
    return Relation(tuple(scheme), frozenset(tuple(r) for r in rows), name)


@dataclass(frozen=True)
class JoinQuery:
    relations: tuple

    def __post_init__(self):
        rels = tuple(sorted(self.relations, key=lambda r: r.scheme))
        schemes = [r.scheme for r in rels]
        if len(set(schemes)) != len(schemes):
            raise RelationError("query is not simple: two relations share a scheme")
        object.__setattr__(self, "relations", rels)

    @property
    def attset(self) -> frozenset:
        return frozenset(a for r in self.relations for a in r.scheme)

    @property
    def m(self) -> int:
        return sum(len(r) for r in self.relations)

    @property
    def is_binary(self) -> bool:
        return all(len(r.scheme) == 2 for r in self.relations)

    def relation(self, scheme) -> Relation:
        key = tuple(sorted(scheme))
        for r in self.relations:
            if r.scheme == key:
                return r
        raise KeyError(key)

    def by_edge(self) -> dict:
        return {frozenset(r.scheme): r for r in self.relations}


def project(t: Mapping, attrs) -> dict:
    attrs = set(attrs)
    missing = attrs - set(t)
    if missing:
        raise RelationError(f"cannot project on {sorted(missing)}")
    return {a: t[a] for a in sorted(attrs)}


def _relations(q) -> list:
    return list(q.relations) if isinstance(q, JoinQuery) else list(q)


def _attribute_order(rels) -> list:
    # most frequent attribute first, then greedily those sharing relations
    attrs = sorted({a for r in rels for a in r.scheme})
    if not attrs:
        return []
    deg = {a: sum(a in r.scheme for r in rels) for a in attrs}
    order = []
    while len(order) < len(attrs):
        placed = set(order)
        def score(a):
            linked = sum(1 for r in rels if a in r.scheme and placed & set(r.scheme))
            return (-linked, -deg[a], a)
        order.append(min((a for a in attrs if a not in placed), key=score))
    return order


class _Plan:
    """Per-relation tries keyed along a global attribute order."""

    def __init__(self, rels, order):
        pos = {a: i for i, a in enumerate(order)}
        self.order = order
        # at depth d: list of (trie, prefix attrs) for relations whose d-th attr is order[d]
        self.at = [[] for _ in order]
        for r in rels:
            attrs = sorted(r.scheme, key=pos.__getitem__)
            cols = [r.scheme.index(a) for a in attrs]
            trie = {}
            for row in r.rows:
                node = trie
                for c in cols[:-1]:
                    node = node.setdefault(row[c], {})
                node.setdefault(row[cols[-1]], None)
            for j, a in enumerate(attrs):
                self.at[pos[a]].append((trie, [pos[b] for b in attrs[:j]]))

    def candidates(self, depth, assigned):
        sets = []
        for trie, prefix in self.at[depth]:
            node = trie
            for d in prefix:
                node = node.get(assigned[d])
                if node is None:
                    return ()
            sets.append(node)
        sets.sort(key=len)
        best = sets[0]
        if len(sets) == 1:
            return sorted(best)
        rest = sets[1:]
        return sorted(v for v in best if all(v in s for s in rest))


def join_oracle(q) -> Relation:
    """Join(Q) by attribute-at-a-time backtracking.

    Accepts a JoinQuery or any iterable of relations (repeated schemes are
    fine).  The empty query joins to the single empty tuple.
    """
    rels = _relations(q)
    if any(len(r) == 0 for r in rels):
        order = sorted({a for r in rels for a in r.scheme})
        return Relation(tuple(order), frozenset())
    order = _attribute_order(rels)
    plan = _Plan(rels, order)
    out = []
    assigned = [None] * len(order)

    def rec(d):
        if d == len(order):
            out.append(tuple(assigned))
            return
        for v in plan.candidates(d, assigned):
            assigned[d] = v
            rec(d + 1)

    rec(0)
    return Relation(tuple(order), frozenset(out))


def count_join(q) -> int:
    """|Join(Q)| without materializing the tail once remaining attributes are independent."""
    rels = _relations(q)
    if any(len(r) == 0 for r in rels):
        return 0
    order = _attribute_order(rels)
    if not order:
        return 1
    plan = _Plan(rels, order)
    pos = {a: i for i, a in enumerate(order)}
    # past `cut` no relation holds two unassigned attributes, so counts multiply
    cut = max((sorted(pos[a] for a in r.scheme)[-2] + 1 for r in rels if len(r.scheme) > 1),
              default=0)
    assigned = [None] * len(order)

    def rec(d):
        if d >= cut:
            total = 1
            for dd in range(d, len(order)):
                total *= len(plan.candidates(dd, assigned))
                if not total:
                    return 0
            return total
        total = 0
        for v in plan.candidates(d, assigned):
            assigned[d] = v
            total += rec(d + 1)
        return total

    return rec(0)


def semijoin_filter(r: Relation, x, allowed) -> Relation:
    i = r.column(x)
    allowed = set(allowed)
    return Relation(r.scheme, frozenset(row for row in r.rows if row[i] in allowed), r.name)


def cartesian_oracle(rs: Sequence[Relation]) -> Relation:
    seen = set()
    for r in rs:
        if seen & set(r.scheme):
            raise RelationError("cartesian product needs disjoint schemes")
        seen |= set(r.scheme)
    scheme = tuple(a for r in rs for a in r.scheme)
    rows = (tuple(v for part in combo for v in part) for combo in product(*(r.sorted_rows() for r in rs)))
    return Relation(scheme, frozenset(rows))


def read_relation(path, name: str | None = None) -> Relation:
    """Load the tab-separated text format: header of attribute names, then value rows."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().rstrip("\n")
        if not header:
            raise RelationError(f"{path}: missing header line")
        scheme = header.split("\t")
        rows = set()
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != len(scheme):
                raise RelationError(f"{path}:{lineno}: expected {len(scheme)} fields")
            try:
                row = tuple(int(p) for p in parts)
            except ValueError:
                raise RelationError(f"{path}:{lineno}: non-integer value") from None
            if any(v < 0 or v > MAX_VALUE for v in row):
                raise RelationError(f"{path}:{lineno}: value outside unsigned 64-bit range")
            rows.add(row)
    return Relation(tuple(scheme), frozenset(rows), name or path.stem)


def write_relation(path, r: Relation) -> None:
    with Path(path).open("w") as fh:
        fh.write("\t".join(map(str, r.scheme)) + "\n")
        for row in r.sorted_rows():
            fh.write("\t".join(map(str, row)) + "\n")


def read_query(directory) -> JoinQuery:
    files = sorted(Path(directory).glob("*.tsv"))
    if not files:
        raise RelationError(f"no .tsv relation files in {directory}")
    return JoinQuery(tuple(read_relation(f) for f in files))


def write_query(directory, q: JoinQuery) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in q.relations:
        p = directory / ("R_" + "_".join(r.scheme) + ".tsv")
        write_relation(p, r)
        paths.append(p)
    return paths
