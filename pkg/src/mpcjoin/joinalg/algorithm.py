"""The constant-round join for simple binary queries, run on the simulator.

Rounds:

0. histogram replication (charged, not simulated)
1. every input tuple travels to the step-1 slice of each configuration it
   belongs to; tuples of edges inside H travel as feasibility witnesses
2. semi-join A: unary residual values go to their (X, x) owner, light
   tuples to the owner of a border endpoint
3. semi-join B: owners filter by R''_X and forward to the other endpoint
4. count broadcast: sizes of R''_X per configuration and witness counts
5. step 3: per configuration a grid (isolated product) composed with a
   hypercube (light join), then a local pass emits results

Plans that depend only on replicated knowledge are computed once and
shared, since every machine would derive the same thing.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping

from ..hashing import bucket, derive_seed, text_id
from ..hypergraph import build_hypergraph, edge_cover_lp
from ..mpcsim import Cluster, LoadReport, Message, fanout, init_cluster, rows_of
from ..primitives import (attribute_hash, fit_shares, grid_routes, local_join, merge_product,
                          plan_grid, _linear)
from ..relcore import JoinQuery, Relation
from ..taxonomy import Configuration, HeavyLightIndex, all_subsets, classify
from .framework import Layout, layout
from .stats import (Histogram, build_histogram, choose_lambda, step1_allocation, step3_allocation,
                    step3_constant, step3_demand)

log = logging.getLogger(__name__)


class JoinAlgorithmError(ValueError):
    pass


# ---------------------------------------------------------------- replicated plans

@dataclass
class HPlan:
    h: tuple
    lay: Layout
    seed: int
    configs: list
    alloc1: dict
    start1: dict
    inactive: tuple          # schemes inside H
    lookup: dict             # scheme -> {values on H ∩ e: [configs]}
    raw1: int = 0

    def slot1(self, cfg, pos: int, p: int) -> int:
        return (self.start1[cfg] + pos) % p

    def owner(self, cfg, attr, value, p: int) -> int:
        return self.slot1(cfg, bucket(self.seed, self.alloc1[cfg], text_id(attr), value), p)


@dataclass
class ConfigPlan3:
    cfg: Configuration
    start: int
    machines: int
    p1: int
    p2: int
    grid: object = None          # GridPlan over isolated attributes
    grid_order: tuple = ()       # isolated attributes by grid rank
    shares: dict = field(default_factory=dict)
    hashes: dict = field(default_factory=dict)
    prefix: dict = field(default_factory=dict)   # X -> {machine: first id - 1}
    flagged: bool = False

    def place(self, r: int, c: int, p: int) -> int:
        return (self.start + r * self.p1 + c) % p


@dataclass
class RunInfo:
    lam: int
    rho: Fraction
    k: int
    histogram_words: int
    plans: dict = field(default_factory=dict)    # H -> HPlan
    step3: dict = field(default_factory=dict)    # H -> {cfg: ConfigPlan3}
    sums: dict = field(default_factory=dict)     # H -> (raw1, final1, raw3, final3)
    events: list = field(default_factory=list)


@dataclass
class SolveResult:
    relation: Relation
    report: LoadReport
    info: RunInfo
    cluster: Cluster = field(repr=False, default=None)


def _hplans(q: JoinQuery, g, hist: Histogram, idx: HeavyLightIndex, p: int, seed: int,
            k: int, events: list, c1=None) -> dict:
    plans = {}
    for h in all_subsets(idx.heavy_attributes()):
        choices = [sorted(idx.heavy_on(a)) for a in h]
        alive = {}
        for eta in product(*choices):
            cfg = Configuration(h, eta)
            parts = hist.edge_parts(q, cfg)
            if all(parts.values()):
                alive[cfg] = sum(parts.values())
        if not alive:
            continue
        alloc, raw = step1_allocation(alive, p, idx.lam, k, q.m, c1, events)
        hseed = derive_seed(seed, "H", *h)
        offset = bucket(hseed, p, 1)
        start, acc = {}, 0
        for cfg in sorted(alive):
            start[cfg] = (offset + acc) % p
            acc += alloc[cfg]
        hs = set(h)
        lookup = {}
        inactive = []
        for r in q.relations:
            key = tuple(a for a in r.scheme if a in hs)
            if len(key) == len(r.scheme):
                inactive.append(r.scheme)
            table = defaultdict(list)
            for cfg in sorted(alive):
                table[tuple(cfg.value(a) for a in key)].append(cfg)
            lookup[r.scheme] = dict(table)
        plans[h] = HPlan(h, layout(g, h), hseed, sorted(alive), alloc, start, tuple(inactive),
                         lookup, raw)
    return plans


# ---------------------------------------------------------------- per-machine derived state

def _border_values(store, hp: HPlan, cfg, attr) -> set:
    """R''_attr(eta) values owned by this machine."""
    vals = None
    for e in hp.lay.cross_at(attr):
        got = set(store.get(("u", hp.h, cfg.eta, tuple(sorted(e))), ()))
        vals = got if vals is None else vals & got
        if not vals:
            return set()
    return vals or set()


def _light_survivors(store, hp: HPlan, cfg) -> dict:
    """Light tuples that passed every border filter and now rest here, per scheme."""
    out = defaultdict(list)
    border = hp.lay.border
    cache = {}

    def allowed(attr):
        if attr not in cache:
            cache[attr] = _border_values(store, hp, cfg, attr)
        return cache[attr]

    for e in hp.lay.light_edges:
        scheme = tuple(sorted(e))
        a0, a1 = scheme
        if a0 not in border and a1 not in border:
            out[scheme].extend(rows_of(store.get(("s1", hp.h, cfg.eta, scheme), ()), 2))
        for row in rows_of(store.get(("l1", hp.h, cfg.eta, scheme), ()), 2):
            if a1 not in border and row[0] in allowed(a0):
                out[scheme].append(row)
        for row in rows_of(store.get(("l2", hp.h, cfg.eta, scheme), ()), 2):
            if row[1] in allowed(a1):
                out[scheme].append(row)
    return out


# ---------------------------------------------------------------- rounds

def _step1(c: Cluster, q: JoinQuery, idx, plans: dict):
    by_scheme = defaultdict(list)
    for hp in plans.values():
        for r in q.relations:
            by_scheme[(r.scheme, frozenset(hp.h) & frozenset(r.scheme))].append(hp)
    p = c.p

    def compute(mid, store, ctx):
        out = []
        for r in q.relations:
            scheme = r.scheme
            for row in rows_of(store.get(("in", scheme), ()), len(scheme)):
                heavy = frozenset(a for a, v in zip(scheme, row) if idx.is_heavy(a, v))
                for hp in by_scheme.get((scheme, heavy), ()):
                    key = tuple(v for a, v in zip(scheme, row) if a in heavy)
                    rest = tuple(v for a, v in zip(scheme, row) if a not in heavy)
                    for cfg in hp.lookup[scheme].get(key, ()):
                        if rest:
                            pos = bucket(hp.seed, hp.alloc1[cfg], text_id(scheme[0]), *row)
                            out.append(Message(hp.slot1(cfg, pos, p), rest, ("s1", hp.h, cfg.eta, scheme)))
                        else:
                            out.append(Message(hp.slot1(cfg, 0, p), row, ("w", hp.h, cfg.eta, scheme)))
        return out

    c.run_round(compute, "step1")


def _semijoin_a(c: Cluster, plans: dict):
    p = c.p

    def compute(mid, store, ctx):
        out = []
        for tag, words in store.items():
            if tag[0] != "s1":
                continue
            _, h, eta, scheme = tag
            hp = plans[h]
            cfg = Configuration(h, eta)
            rest = tuple(a for a in scheme if a not in hp.lay.h_set)
            if len(rest) == 1:
                x = rest[0]
                for (v,) in rows_of(words, 1):
                    out.append(Message(hp.owner(cfg, x, v, p), (v,), ("u", h, eta, scheme)))
                continue
            a0, a1 = scheme
            for row in rows_of(words, 2):
                if a0 in hp.lay.border:
                    out.append(Message(hp.owner(cfg, a0, row[0], p), row, ("l1", h, eta, scheme)))
                elif a1 in hp.lay.border:
                    out.append(Message(hp.owner(cfg, a1, row[1], p), row, ("l2", h, eta, scheme)))
        return out

    c.run_round(compute, "semijoin-a")


def _semijoin_b(c: Cluster, plans: dict):
    p = c.p

    def compute(mid, store, ctx):
        out = []
        for tag, words in store.items():
            if tag[0] != "l1":
                continue
            _, h, eta, scheme = tag
            hp = plans[h]
            a0, a1 = scheme
            if a1 not in hp.lay.border:
                continue  # filtered lazily where it rests
            cfg = Configuration(h, eta)
            ok = _border_values(store, hp, cfg, a0)
            for row in rows_of(words, 2):
                if row[0] in ok:
                    out.append(Message(hp.owner(cfg, a1, row[1], p), row, ("l2", h, eta, scheme)))
        return out

    c.run_round(compute, "semijoin-b")


def _local_counts(store, plans: dict) -> dict:
    """(H, eta, X) -> |R''_X| here, and (H, eta, None) -> witnessed inside edges."""
    counts = {}
    seen = set()
    for tag in list(store.keys()):
        if tag[0] not in ("u", "w"):
            continue
        _, h, eta, _ = tag
        if (h, eta) in seen:
            continue
        seen.add((h, eta))
        hp = plans[h]
        cfg = Configuration(h, eta)
        for x in sorted(hp.lay.i_set):
            n = len(_border_values(store, hp, cfg, x))
            if n:
                counts[(h, eta, x)] = n
        w = sum(1 for s in hp.inactive if store.get(("w", h, eta, s)))
        if w:
            counts[(h, eta, None)] = w
    return counts


def _entry_table(plans: dict) -> list:
    table = []
    for h in sorted(plans):
        hp = plans[h]
        for cfg in hp.configs:
            for x in sorted(hp.lay.i_set):
                table.append((h, cfg.eta, x))
            table.append((h, cfg.eta, None))
    return table


def _broadcast_counts(c: Cluster, plans: dict, table: list):
    index = {key: i for i, key in enumerate(table)}

    def compute(mid, store, ctx):
        words = []
        for key, n in sorted(_local_counts(store, plans).items(), key=lambda kv: index[kv[0]]):
            words.extend((index[key], n))
        if not words:
            return ()
        return fanout(ctx.p, mid, words, ("cnt", mid))

    c.run_round(compute, "count-broadcast")


def _gather_counts(store, own: dict, mid: int, table: list) -> dict:
    """(H, eta, X) -> {machine: count}, as every machine sees it after the broadcast."""
    out = defaultdict(dict)
    for tag, words in store.items():
        if tag[0] != "cnt":
            continue
        sender = tag[1]
        for i in range(0, len(words), 2):
            out[table[words[i]]][sender] = words[i + 1]
    for key, n in own.items():
        out[key][mid] = n
    return out


def _plan_step3(counts: Mapping, plans: dict, info: RunInfo, p: int, m: int, seed: int) -> dict:
    lam, rho, k = info.lam, info.rho, info.k
    result = {}
    for h in sorted(plans):
        hp = plans[h]
        lay = hp.lay
        demands, sizes = {}, {}
        for cfg in hp.configs:
            # every edge inside H must have produced its witness
            if sum(counts.get((h, cfg.eta, None), {}).values()) < len(hp.inactive):
                continue
            sz = {x: sum(counts.get((h, cfg.eta, x), {}).values()) for x in sorted(lay.i_set)}
            if any(n == 0 for n in sz.values()):
                continue
            js = []
            for j in lay.nonempty_subsets_of_i():
                n = 1
                for x in j:
                    n *= sz[x]
                js.append((len(j), n))
            demands[cfg] = step3_demand(lam, rho, m, p, len(lay.l_set), js)
            sizes[cfg] = sz
        if not demands:
            info.sums[h] = (hp.raw1, sum(hp.alloc1.values()), 0, 0)
            continue
        c2 = step3_constant(lam, k, p, len(lay.i_set))
        alloc, raw = step3_allocation(demands, c2, p, info.events)
        info.sums[h] = (hp.raw1, sum(hp.alloc1.values()), raw, sum(alloc.values()))
        offset = bucket(derive_seed(hp.seed, "step3"), p, 1)
        acc = 0
        per = {}
        core = sorted(lay.core)
        for cfg in sorted(demands):
            n = alloc[cfg]
            full = lam ** len(core)
            if full <= n:
                shares = {a: lam for a in core}
                flagged = False
            else:
                shares = fit_shares(core, {tuple(sorted(e)): 1 for e in lay.light_edges}, lam, n)
                flagged = True
                info.events.append(f"H={list(h)} eta={cfg.eta}: {n} machines < {full} for the "
                                   f"hypercube, shares reduced to {shares}")
            p2 = 1
            for a in core:
                p2 *= shares[a]
            p1 = max(1, n // p2)
            cp = ConfigPlan3(cfg, (offset + acc) % p, n, p1, p2, shares=shares, flagged=flagged)
            acc += n
            if lay.i_set:
                order = sorted(lay.i_set, key=lambda x: (-sizes[cfg][x], x))
                cp.grid = plan_grid([sizes[cfg][x] for x in order], p1)
                cp.grid_order = tuple(order)
                for x in order:
                    run, pre = 0, {}
                    for mach, cnt in sorted(counts.get((h, cfg.eta, x), {}).items()):
                        pre[mach] = run
                        run += cnt
                    cp.prefix[x] = pre
            cfg_seed = derive_seed(hp.seed, "eta", *cfg.eta)
            cp.hashes = {a: attribute_hash(cfg_seed, a, shares[a]) for a in core}
            per[cfg] = cp
        result[h] = per
    return result


def _hypercube_rows(cp: ConfigPlan3, core: list, scheme: tuple, row: tuple) -> list:
    dims = [cp.shares[a] for a in core]
    axes = []
    for a in core:
        if a in scheme:
            axes.append((cp.hashes[a](row[scheme.index(a)]),))
        else:
            axes.append(range(cp.shares[a]))
    return [_linear(coord, dims) for coord in product(*axes)]


def _step3(c: Cluster, plans: dict, table: list, info: RunInfo, m: int, seed: int):
    p = c.p
    memo = {}
    index = {key: i for i, key in enumerate(table)}

    def plan_for(store, mid):
        own = _local_counts(store, plans)
        counts = _gather_counts(store, own, mid, table)
        key = tuple(sorted((index[k], tuple(sorted(v.items()))) for k, v in counts.items()))
        if key not in memo:
            memo[key] = _plan_step3(counts, plans, info, p, m, seed)
        return memo[key]

    def compute(mid, store, ctx):
        step3 = plan_for(store, mid)
        out = []
        for h, per in step3.items():
            hp = plans[h]
            core = sorted(hp.lay.core)
            for cfg, cp in per.items():
                for x in cp.grid_order:
                    rank = cp.grid_order.index(x)
                    base = cp.prefix[x].get(mid, 0)
                    for i, v in enumerate(sorted(_border_values(store, hp, cfg, x)), start=1):
                        cols = grid_routes(cp.grid, rank, base + i)
                        for col in cols:
                            for r in range(cp.p2):
                                out.append(Message(cp.place(r, col, p), (v,), ("g", h, cfg.eta, x)))
                if not core:
                    continue
                for scheme, rows in _light_survivors(store, hp, cfg).items():
                    for row in rows:
                        for r in _hypercube_rows(cp, core, scheme, row):
                            for col in range(cp.p1):
                                out.append(Message(cp.place(r, col, p), row, ("h", h, cfg.eta, scheme)))
        return out

    c.run_round(compute, "step3")
    info.step3 = next(iter(memo.values())) if len(memo) == 1 else _consistent(memo)
    return info.step3


def _consistent(memo: dict):
    if not memo:
        return {}
    raise JoinAlgorithmError("machines derived different step-3 plans from the broadcast")


def _emit(c: Cluster, q: JoinQuery, plans: dict, step3: dict):
    attrs = tuple(sorted(q.attset))
    p = c.p

    def finish(mid, store, ctx):
        rows = set()
        for h, per in step3.items():
            lay = plans[h].lay
            for cfg, cp in per.items():
                eta = cfg.as_dict()
                if not lay.l_set:
                    if mid == cp.start:
                        rows.add(tuple(eta[a] for a in attrs))
                    continue
                iso_s, iso = (), {()}
                for x in sorted(lay.i_set):
                    vals = store.get(("g", h, cfg.eta, x))
                    if not vals:
                        iso = set()
                        break
                    iso_s, iso = merge_product(iso_s, iso, (x,), [(v,) for v in vals])
                if not iso:
                    continue
                if lay.core:
                    rels = []
                    for e in lay.light_edges:
                        scheme = tuple(sorted(e))
                        got = rows_of(store.get(("h", h, cfg.eta, scheme), ()), 2)
                        rels.append(Relation(scheme, frozenset(got)))
                    light_s, light = local_join(rels)
                else:
                    light_s, light = (), {()}
                if not light:
                    continue
                scheme, part = merge_product(iso_s, iso, light_s, light)
                for row in part:
                    t = dict(zip(scheme, row))
                    t.update(eta)
                    rows.add(tuple(t[a] for a in attrs))
        if rows:
            c.emit(mid, rows)

    c.local(finish)
    return attrs


def solve_join(q: JoinQuery, p: int, seed: int = 0, lam: int | None = None,
               lambda_factor=1, schedule=None, c1=None) -> SolveResult:
    """Compute Join(q) on ``p`` simulated machines; returns the collected result and loads."""
    if not isinstance(q, JoinQuery):
        q = JoinQuery(tuple(q))
    if not q.relations:
        raise JoinAlgorithmError("empty query")
    if not q.is_binary:
        raise JoinAlgorithmError("solve_join needs a binary query (every relation over two attributes)")
    if p < 1:
        raise JoinAlgorithmError("p must be >= 1")
    g = build_hypergraph(q)
    rho = edge_cover_lp(g).optimum
    k = len(g.vertices)
    m = q.m
    if lam is None:
        lam = choose_lambda(p, rho, lambda_factor)
    if lam < 1:
        raise JoinAlgorithmError("lambda must be >= 1")
    lam = min(lam, max(m, 1))
    attrs = tuple(sorted(q.attset))
    c = init_cluster(p, q, seed, schedule)
    if m == 0:
        info = RunInfo(lam, rho, k, 0)
        return SolveResult(Relation(attrs, frozenset()), c.load_report(), info, c)
    if m < p ** 3:
        log.debug("m=%d < p^3=%d: outside the regime the load guarantee assumes", m, p ** 3)
    idx = classify(q, lam)
    hist = build_histogram(q, p, rho, idx)
    info = RunInfo(lam, rho, k, hist.words)
    c.charge([hist.words + -(-m // p)] * p, "histogram")
    plans = _hplans(q, g, hist, idx, p, seed, k, info.events, c1)
    info.plans = plans
    c.shared = hist
    _step1(c, q, idx, plans)
    _semijoin_a(c, plans)
    _semijoin_b(c, plans)
    table = _entry_table(plans)
    _broadcast_counts(c, plans, table)
    step3 = _step3(c, plans, table, info, m, seed)
    _emit(c, q, plans, step3)
    rel = Relation(attrs, frozenset(c.collected()))
    return SolveResult(rel, c.load_report(), info, c)
