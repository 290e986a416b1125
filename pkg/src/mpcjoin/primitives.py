"""One-round building blocks: grid cartesian product, product composition,
and the share-based hypercube join for skew-free inputs.

Each block is described by a :class:`OneRound`: a routing function telling
where an input tuple must go, and a ``finish`` function computing a
machine's local output from what it received.  The same objects are driven
standalone here (:func:`run_one_round`, :func:`compose_products`) and inside
the combined rounds of :mod:`mpcjoin.joinalg`.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from .hashing import bucket, derive_seed
from .hypergraph import iroot_ceil
from .mpcsim import Cluster, Message
from .relcore import JoinQuery, Relation

log = logging.getLogger(__name__)


class PrimitiveError(ValueError):
    pass


# ---------------------------------------------------------------- local join

def local_join(relations: Sequence[Relation]) -> tuple[tuple, set]:
    """Hash-join pipeline used as the machine-local kernel.

    Returns (sorted scheme, set of rows).  Deliberately a different
    algorithm from :func:`mpcjoin.relcore.join_oracle`.
    """
    if not relations:
        return (), {()}
    rels = sorted(relations, key=len)
    if len(rels[0]) == 0:
        scheme = tuple(sorted({a for r in rels for a in r.scheme}))
        return scheme, set()
    cur_scheme = list(rels[0].scheme)
    cur = list(rels[0].rows)
    pending = rels[1:]
    while pending:
        # closing relations (most shared attributes) first: they only filter
        have = set(cur_scheme)
        idx = min(range(len(pending)),
                  key=lambda i: (-len(have & set(pending[i].scheme)), len(pending[i]), i))
        r = pending.pop(idx)
        shared = [a for a in r.scheme if a in cur_scheme]
        extra = [a for a in r.scheme if a not in cur_scheme]
        rpos = [r.scheme.index(a) for a in shared]
        epos = [r.scheme.index(a) for a in extra]
        cpos = [cur_scheme.index(a) for a in shared]
        table = defaultdict(list)
        for row in r.rows:
            table[tuple(row[i] for i in rpos)].append(tuple(row[i] for i in epos))
        nxt = []
        for row in cur:
            for ext in table.get(tuple(row[i] for i in cpos), ()):
                nxt.append(row + ext)
        cur_scheme += extra
        cur = nxt
        if not cur:
            break
    order = sorted(range(len(cur_scheme)), key=lambda i: cur_scheme[i])
    scheme = tuple(cur_scheme[i] for i in order)
    if not cur:
        scheme = tuple(sorted({a for r in rels for a in r.scheme}))
        return scheme, set()
    return scheme, {tuple(row[i] for i in order) for row in cur}


def merge_product(s1: tuple, rows1: Iterable, s2: tuple, rows2: Iterable) -> tuple[tuple, set]:
    if set(s1) & set(s2):
        raise PrimitiveError("product of overlapping schemes")
    scheme = tuple(sorted(s1 + s2))
    src = [(0, s1.index(a)) if a in s1 else (1, s2.index(a)) for a in scheme]
    rows2 = list(rows2)
    out = set()
    for a in rows1:
        for b in rows2:
            pair = (a, b)
            out.add(tuple(pair[k][i] for k, i in src))
    return scheme, out


# ---------------------------------------------------------------- one-round algorithms

@dataclass
class OneRound:
    p: int
    route: Callable[[int, tuple], list]           # (relation index, row) -> machines in [0, p)
    finish: Callable[[Mapping[int, list]], tuple]  # {relation index: rows} -> (scheme, rows)
    relations: Sequence[Relation]


def run_one_round(c: Cluster, alg: OneRound, base: int = 0, label: str = "one-round",
                  emit: bool = True):
    """Run ``alg`` on machines ``base .. base+alg.p-1`` and emit local results.

    Input tuple k (canonical order within the relation list) starts on
    machine ``k mod c.p``.  ``emit=False`` only routes (for load studies
    whose output would not fit in memory).
    """
    if base + alg.p > c.p:
        raise PrimitiveError(f"slice [{base}, {base + alg.p}) exceeds cluster of {c.p}")
    placed = defaultdict(list)
    k = 0
    for i, r in enumerate(alg.relations):
        for row in r.sorted_rows():
            placed[k % c.p].append((i, row))
            k += 1

    def compute(mid, store, ctx):
        out = []
        for i, row in placed.get(mid, ()):
            for d in alg.route(i, row):
                out.append(Message(base + d, row, ("rel", i)))
        return out

    delta = c.run_round(compute, label)
    if not emit:
        return delta
    arity = {i: len(r.scheme) for i, r in enumerate(alg.relations)}

    def emit(mid, store, ctx):
        if not base <= mid < base + alg.p:
            return
        got = _received(store, arity)
        if got is not None:
            c.emit(mid, alg.finish(got)[1])

    c.local(emit)
    return delta


def _received(store, arity):
    got = {}
    for (kind, i), words in store.items() if store else ():
        if kind == "rel":
            n = arity[i]
            got[i] = [tuple(words[j:j + n]) for j in range(0, len(words), n)] if n else []
    return got


# ---------------------------------------------------------------- grid cartesian product

@dataclass(frozen=True)
class GridPlan:
    t_prime: int
    dims: tuple
    L_threshold: int
    thresholds: tuple  # L_1 .. L_t

    @property
    def machines(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n


def plan_grid(sizes: Sequence[int], p: int) -> GridPlan:
    """Grid shape for the cartesian product of relations sized ``sizes`` (descending).

    L_i = ceil((|R_1|...|R_i| / p) ** (1/i)); t' is the largest i with
    |R_j| >= L_j for all j <= i; dimension i has floor(|R_i| / L_t') machines.
    Relations after t' are broadcast.
    """
    if not sizes:
        raise PrimitiveError("plan_grid needs at least one relation")
    if p < 1:
        raise PrimitiveError("p must be >= 1")
    if list(sizes) != sorted(sizes, reverse=True):
        raise PrimitiveError("sizes must be sorted in descending order")
    thresholds = []
    prod_ = 1
    for i, s in enumerate(sizes, start=1):
        prod_ *= s
        thresholds.append(max(1, iroot_ceil(-(-prod_ // p), i)))
    t_prime = 0
    for i, s in enumerate(sizes):
        if s >= thresholds[i]:
            t_prime = i + 1
        else:
            break
    t_prime = max(t_prime, 1)
    L = thresholds[t_prime - 1]
    dims = tuple(max(1, s // L) for s in sizes[:t_prime])
    return GridPlan(t_prime, dims, L, tuple(thresholds))


def _coords(dims):
    return list(product(*(range(d) for d in dims)))


def _linear(coord, dims):
    idx = 0
    for c_, d in zip(coord, dims):
        idx = idx * d + c_
    return idx


def grid_routes(plan: GridPlan, rank: int, tuple_id: int) -> list:
    """Machines (0-based, in the grid) receiving tuple ``tuple_id`` (1-based) of relation ``rank``."""
    dims = plan.dims
    if rank >= plan.t_prime:
        return list(range(plan.machines))
    fixed = tuple_id % dims[rank]
    axes = [range(d) if i != rank else (fixed,) for i, d in enumerate(dims)]
    return [_linear(c, dims) for c in product(*axes)]


def grid_algorithm(relations: Sequence[Relation], p: int) -> OneRound:
    """Deterministic cartesian product of relations with pairwise disjoint schemes."""
    seen = set()
    for r in relations:
        if seen & set(r.scheme):
            raise PrimitiveError("grid_cartesian needs disjoint schemes")
        seen |= set(r.scheme)
    order = sorted(range(len(relations)), key=lambda i: (-len(relations[i]), relations[i].scheme))
    rank_of = {i: k for k, i in enumerate(order)}
    plan = plan_grid([len(relations[i]) for i in order], p)
    ids = {i: {row: j for j, row in enumerate(r.sorted_rows(), start=1)} for i, r in enumerate(relations)}

    def route(i, row):
        return grid_routes(plan, rank_of[i], ids[i][row])

    def finish(got):
        scheme, rows = (), {()}
        for i, r in enumerate(relations):
            scheme, rows = merge_product(scheme, rows, r.scheme, got.get(i, ()))
        return scheme, rows

    alg = OneRound(p, route, finish, list(relations))
    alg.plan = plan
    return alg


def grid_cartesian(c: Cluster, relations: Sequence[Relation], base: int = 0, p: int | None = None,
                   emit: bool = True):
    alg = grid_algorithm(relations, p or (c.p - base))
    return run_one_round(c, alg, base, "grid", emit), alg.plan


# ---------------------------------------------------------------- composition

def compose(alg1: OneRound, alg2: OneRound) -> OneRound:
    """Product of two one-round algorithms on a p2 x p1 machine matrix.

    Row r runs an instance of alg1 and column c an instance of alg2; every
    instance of the same algorithm reuses the same routing (same random
    choices), so machine r*p1 + c holds alg1's c-tuples and alg2's r-tuples.
    """
    p1, p2 = alg1.p, alg2.p
    n1 = len(alg1.relations)

    def route(i, row):
        if i < n1:
            return [r * p1 + c for c in alg1.route(i, row) for r in range(p2)]
        return [r * p1 + c for r in alg2.route(i - n1, row) for c in range(p1)]

    def finish(got):
        a = alg1.finish({i: rows for i, rows in got.items() if i < n1})
        b = alg2.finish({i - n1: rows for i, rows in got.items() if i >= n1})
        return merge_product(a[0], a[1], b[0], b[1])

    return OneRound(p1 * p2, route, finish, list(alg1.relations) + list(alg2.relations))


def compose_products(c: Cluster, alg1: OneRound, alg2: OneRound, base: int = 0,
                     size: int | None = None):
    if size is not None and size != alg1.p * alg2.p:
        raise PrimitiveError(f"slice of {size} machines != {alg1.p} x {alg2.p}")
    return run_one_round(c, compose(alg1, alg2), base, "compose")


# ---------------------------------------------------------------- skew-free hypercube

def check_skew_free(q: JoinQuery, shares: Mapping, c_factor=1) -> bool:
    """Every value's frequency on X_i in each relation is <= c_factor * m / p_i."""
    m = q.m
    for r in q.relations:
        for col, a in enumerate(r.scheme):
            share = shares[a]
            freq = defaultdict(int)
            for row in r.rows:
                freq[row[col]] += 1
            if freq and max(freq.values()) * share > c_factor * m:
                return False
    return True


def attribute_hash(seed: int, attr, share: int):
    s = derive_seed(seed, "attr", attr)
    if share == 1:
        return lambda v: 0
    return lambda v: bucket(s, share, v)


def hypercube_algorithm(relations: Sequence[Relation], shares: Mapping, seed: int) -> OneRound:
    """Share-based hypercube join: one grid axis per attribute.

    A tuple is replicated over every axis of an attribute it lacks, so a
    relation over e is copied prod(shares[X] for X not in e) times.
    """
    attrs = sorted({a for r in relations for a in r.scheme})
    missing = [a for a in attrs if a not in shares]
    if missing:
        raise PrimitiveError(f"no share for {missing}")
    dims = tuple(int(shares[a]) for a in attrs)
    if any(d < 1 for d in dims):
        raise PrimitiveError("shares must be positive")
    hashes = {a: attribute_hash(seed, a, shares[a]) for a in attrs}
    p = 1
    for d in dims:
        p *= d
    cols = [{a: r.scheme.index(a) for a in r.scheme} for r in relations]

    def route(i, row):
        col = cols[i]
        axes = [(hashes[a](row[col[a]]),) if a in col else range(shares[a]) for a in attrs]
        return [_linear(c, dims) for c in product(*axes)]

    def finish(got):
        rels = [Relation(r.scheme, frozenset(got.get(i, ()))) for i, r in enumerate(relations)]
        return local_join(rels)

    return OneRound(p, route, finish, list(relations))


def hypercube_join(c: Cluster, q, shares: Mapping, seed: int, base: int = 0):
    relations = list(q.relations) if isinstance(q, JoinQuery) else list(q)
    alg = hypercube_algorithm(relations, shares, seed)
    if base + alg.p > c.p:
        raise PrimitiveError(f"hypercube needs {alg.p} machines, slice has {c.p - base}")
    return run_one_round(c, alg, base, "hypercube")


def fit_shares(attrs: Sequence, sizes_by_edge: Mapping, cap: int, machines: int) -> dict:
    """Largest share vector (each <= cap) with product <= machines.

    Greedy: repeatedly bump the share of the attribute that lowers the
    heaviest per-machine relation fragment the most.
    """
    shares = {a: 1 for a in attrs}
    if not attrs:
        return shares

    def worst(sh):
        loads = []
        for e, n in sizes_by_edge.items():
            d = 1
            for a in e:
                d *= sh.get(a, 1)
            loads.append(Fraction(n, d))
        return max(loads, default=Fraction(0))

    used = 1
    while True:
        best = None
        for a in sorted(attrs):
            if shares[a] >= cap:
                continue
            new_used = used // shares[a] * (shares[a] + 1)
            if new_used > machines:
                continue
            trial = dict(shares)
            trial[a] += 1
            key = (worst(trial), new_used, a)
            if best is None or key < best[0]:
                best = (key, a, new_used)
        if best is None:
            return shares
        shares[best[1]] += 1
        used = best[2]
