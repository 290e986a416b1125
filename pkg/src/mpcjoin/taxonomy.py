"""Heavy/light values, configurations and residual queries.

A value x is heavy on attribute X when some relation containing X has at
least m/lambda tuples u with u(X) = x; it is light on X otherwise.  Every
result tuple u then belongs to exactly one subproblem: H = attributes where
u's value is heavy, eta = u restricted to H.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping

from .relcore import JoinQuery, Relation, join_oracle


class TaxonomyError(ValueError):
    pass


@dataclass(frozen=True)
class HeavyLightIndex:
    lam: int
    m: int
    per_attribute_heavy: Mapping  # attr -> frozenset of heavy values on it
    freq: Mapping = field(repr=False, compare=False, default=None)  # (scheme, attr) -> Counter

    @property
    def threshold(self) -> Fraction:
        return Fraction(self.m, self.lam)

    @property
    def heavy_set(self) -> frozenset:
        return frozenset().union(*self.per_attribute_heavy.values()) if self.per_attribute_heavy else frozenset()

    def heavy_on(self, attr) -> frozenset:
        return self.per_attribute_heavy.get(attr, frozenset())

    def is_heavy(self, attr, value) -> bool:
        return value in self.per_attribute_heavy.get(attr, ())

    def heavy_attributes(self) -> list:
        return sorted(a for a, vs in self.per_attribute_heavy.items() if vs)


def frequencies(q: JoinQuery) -> dict:
    out = {}
    for r in q.relations:
        for i, a in enumerate(r.scheme):
            out[(r.scheme, a)] = Counter(row[i] for row in r.rows)
    return out


def classify(q: JoinQuery, lam: int) -> HeavyLightIndex:
    m = q.m
    if not isinstance(lam, int) or lam < 1 or (m and lam > m):
        raise TaxonomyError(f"lambda must satisfy 1 <= lambda <= m={m}, got {lam}")
    freq = frequencies(q)
    heavy = defaultdict(set)
    for (_, a), counts in freq.items():
        heavy[a]  # every attribute gets an entry
        for v, n in counts.items():
            if n * lam >= m:
                heavy[a].add(v)
    return HeavyLightIndex(lam, m, {a: frozenset(vs) for a, vs in heavy.items()}, freq)


@dataclass(frozen=True, order=True)
class Configuration:
    """Heavy values ``eta`` on the sorted attribute tuple ``h_set``."""

    h_set: tuple
    eta: tuple

    def __post_init__(self):
        if len(self.h_set) != len(self.eta):
            raise TaxonomyError("configuration arity mismatch")
        if list(self.h_set) != sorted(self.h_set):
            order = sorted(range(len(self.h_set)), key=lambda i: self.h_set[i])
            object.__setattr__(self, "h_set", tuple(self.h_set[i] for i in order))
            object.__setattr__(self, "eta", tuple(self.eta[i] for i in order))

    def as_dict(self) -> dict:
        return dict(zip(self.h_set, self.eta))

    def value(self, attr):
        return self.eta[self.h_set.index(attr)]

    def __str__(self):
        return "{" + ",".join(f"{a}={v}" for a, v in zip(self.h_set, self.eta)) + "}"


def enumerate_configs(q: JoinQuery, h: Iterable, idx: HeavyLightIndex) -> list:
    h = tuple(sorted(h))
    unknown = set(h) - q.attset
    if unknown:
        raise TaxonomyError(f"{sorted(unknown)} not attributes of the query")
    choices = [sorted(idx.heavy_on(a)) for a in h]
    return [Configuration(h, eta) for eta in product(*choices)]


@dataclass(frozen=True)
class ResidualQuery:
    """Residual relations of one configuration, keyed by the original edge."""

    origin: Configuration
    relations: Mapping  # frozenset(e) -> Relation over e minus H
    feasible: bool

    @property
    def m_eta(self) -> int:
        return sum(len(r) for r in self.relations.values())

    @property
    def light_attributes(self) -> frozenset:
        return frozenset(a for r in self.relations.values() for a in r.scheme)

    def join(self) -> Relation:
        """Join(Q'(eta)) over attset minus H; empty when infeasible."""
        attrs = tuple(sorted(self.light_attributes))
        if not self.feasible:
            return Relation(attrs, frozenset())
        return join_oracle(self.relations.values())


class ResidualBuilder:
    """Computes residual queries for many configurations of one H.

    Each relation is scanned once; tuples are grouped by their values on
    e ∩ H, keeping only those heavy there and light on e minus H.
    """

    def __init__(self, q: JoinQuery, h: Iterable, idx: HeavyLightIndex):
        self.q = q
        self.h = frozenset(h)
        self.idx = idx
        self.active = {}    # edge -> (key attrs, rest attrs, {key: frozenset(rows)})
        self.inactive = {}  # edge -> relation
        for r in q.relations:
            e = frozenset(r.scheme)
            key = tuple(a for a in r.scheme if a in self.h)
            rest = tuple(a for a in r.scheme if a not in self.h)
            if not rest:
                self.inactive[e] = r
                continue
            kpos = [r.scheme.index(a) for a in key]
            rpos = [r.scheme.index(a) for a in rest]
            groups = defaultdict(set)
            for row in r.rows:
                if not all(idx.is_heavy(a, row[i]) for a, i in zip(key, kpos)):
                    continue
                if any(idx.is_heavy(a, row[i]) for a, i in zip(rest, rpos)):
                    continue
                groups[tuple(row[i] for i in kpos)].add(tuple(row[i] for i in rpos))
            self.active[e] = (key, rest, {k: frozenset(v) for k, v in groups.items()})

    def count(self, cfg: Configuration) -> int:
        """m_eta without materializing the relations."""
        total = 0
        for key, _, groups in self.active.values():
            total += len(groups.get(tuple(cfg.value(a) for a in key), ()))
        return total

    def alive(self, cfg: Configuration) -> bool:
        """Feasible and every active residual relation nonempty."""
        if not self.feasible(cfg):
            return False
        return all(tuple(cfg.value(a) for a in key) in groups
                   for key, _, groups in self.active.values())

    def feasible(self, cfg: Configuration) -> bool:
        for e, r in self.inactive.items():
            if tuple(cfg.value(a) for a in r.scheme) not in r.rows:
                return False
        return True

    def residual(self, cfg: Configuration) -> ResidualQuery:
        if frozenset(cfg.h_set) != self.h:
            raise TaxonomyError("configuration is over a different attribute set")
        rels = {}
        for e, (key, rest, groups) in sorted(self.active.items(), key=lambda kv: sorted(kv[0])):
            rows = groups.get(tuple(cfg.value(a) for a in key), frozenset())
            rels[e] = Relation(rest, rows)
        return ResidualQuery(cfg, rels, self.feasible(cfg))


def residual_query(q: JoinQuery, cfg: Configuration, idx: HeavyLightIndex) -> ResidualQuery:
    return ResidualBuilder(q, cfg.h_set, idx).residual(cfg)


def all_subsets(attrs) -> list:
    attrs = sorted(attrs)
    return [tuple(a for i, a in enumerate(attrs) if mask >> i & 1) for mask in range(1 << len(attrs))]


def candidate_subsets(q: JoinQuery, idx: HeavyLightIndex) -> list:
    """Subsets H whose every attribute has a heavy value (others have no configuration)."""
    return all_subsets(idx.heavy_attributes())


@dataclass
class DecompositionReport:
    holds: bool
    disjoint: bool
    total: int
    missing: list
    extra: list
    overlaps: list

    def __str__(self):
        if self.holds:
            return f"decomposition ok ({self.total} tuples, disjoint)"
        return (f"decomposition FAILED: {len(self.missing)} missing e.g. {self.missing[:3]}, "
                f"{len(self.extra)} extra e.g. {self.extra[:3]}, overlaps {self.overlaps[:3]}")


def decompose_check(q: JoinQuery, idx: HeavyLightIndex) -> DecompositionReport:
    """Join(q) equals the disjoint union over (H, eta) of Join(Q'(eta)) x {eta}."""
    full = join_oracle(q)
    scheme = full.scheme
    seen = Counter()
    for h in candidate_subsets(q, idx):
        builder = ResidualBuilder(q, h, idx)
        for cfg in enumerate_configs(q, h, idx):
            if not builder.alive(cfg):
                continue
            part = builder.residual(cfg).join()
            eta = cfg.as_dict()
            for row in part.rows:
                t = dict(zip(part.scheme, row))
                t.update(eta)
                seen[tuple(t[a] for a in scheme)] += 1
    got = set(seen)
    missing = sorted(full.rows - got)
    extra = sorted(got - full.rows)
    overlaps = sorted(t for t, n in seen.items() if n > 1)
    ok = not missing and not extra and not overlaps
    return DecompositionReport(ok, not overlaps, len(full), missing, extra, overlaps)


def config_mass_check(q: JoinQuery, h, idx: HeavyLightIndex) -> tuple:
    """(sum of m_eta over configurations of H, m * lambda**(k-2), holds)."""
    builder = ResidualBuilder(q, h, idx)
    lhs = sum(builder.count(cfg) for cfg in enumerate_configs(q, h, idx))
    k = len(q.attset)
    # for k < 2 the bound reads m / lambda**(2-k); compare exactly
    if k >= 2:
        rhs = Fraction(q.m * idx.lam ** (k - 2))
    else:
        rhs = Fraction(q.m, idx.lam ** (2 - k))
    return lhs, rhs, lhs <= rhs
