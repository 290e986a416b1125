"""Histogram, heavy parameter and machine allocation."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Mapping

from ..hypergraph import iroot_ceil
from ..relcore import JoinQuery
from ..taxonomy import Configuration, HeavyLightIndex

log = logging.getLogger(__name__)

LIGHT = None  # attribute slot of the light-tuple record


def choose_lambda(p: int, rho, factor=1) -> int:
    """max(1, ceil(factor * p ** (1 / (2 rho)))), exactly."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rho = Fraction(rho)
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError("lambda factor must be positive")
    # lam**(2a) >= factor**(2a) * p**b  where rho = a/b
    a, b = rho.numerator, rho.denominator
    num = factor.numerator ** (2 * a) * p ** b
    den = factor.denominator ** (2 * a)
    return max(1, iroot_ceil(-(-num // den), 2 * a))


def record_threshold_met(cnt: int, m: int, p: int, rho) -> bool:
    """cnt >= m / p**(1/rho), without rounding."""
    rho = Fraction(rho)
    a, b = rho.numerator, rho.denominator
    return cnt ** a * p ** b >= m ** a


@dataclass(frozen=True)
class Histogram:
    """Statistical records plus per-heavy-value light-partner counts.

    ``records[(scheme, X, x)]`` is the frequency of x on X in the relation
    over ``scheme``; ``records[(scheme, None, None)]`` counts its tuples with
    only light values.  ``light_complement[(scheme, X, x)]`` counts tuples
    with heavy x on X whose other value is light.
    """

    m: int
    p: int
    rho: Fraction
    lam: int
    records: Mapping
    light_complement: Mapping = field(default_factory=dict)

    @property
    def words(self) -> int:
        # a record is four words: relation, attribute, value, count
        return 4 * (len(self.records) + len(self.light_complement))

    def light_count(self, scheme) -> int:
        return self.records.get((tuple(scheme), LIGHT, LIGHT), 0)

    def m_eta(self, q: JoinQuery, cfg: Configuration) -> int:
        return sum(self.edge_parts(q, cfg).values())

    def edge_parts(self, q: JoinQuery, cfg: Configuration) -> dict:
        """Residual size per active edge under ``cfg``."""
        h = set(cfg.h_set)
        out = {}
        for r in q.relations:
            inside = [a for a in r.scheme if a in h]
            if len(inside) == len(r.scheme):
                continue
            if not inside:
                out[r.scheme] = self.light_count(r.scheme)
            else:
                x = inside[0]
                out[r.scheme] = self.light_complement.get((r.scheme, x, cfg.value(x)), 0)
        return out


def build_histogram(q: JoinQuery, p: int, rho, idx: HeavyLightIndex) -> Histogram:
    if not q.is_binary:
        raise ValueError("histogram needs a binary query")
    m = q.m
    records = {}
    complement = Counter()
    for r in q.relations:
        for i, a in enumerate(r.scheme):
            for v, n in Counter(row[i] for row in r.rows).items():
                if record_threshold_met(n, m, p, rho):
                    records[(r.scheme, a, v)] = n
        (a0, a1) = r.scheme
        light = 0
        for x0, x1 in r.rows:
            h0, h1 = idx.is_heavy(a0, x0), idx.is_heavy(a1, x1)
            if not h0 and not h1:
                light += 1
            elif h0 and not h1:
                complement[(r.scheme, a0, x0)] += 1
            elif h1 and not h0:
                complement[(r.scheme, a1, x1)] += 1
        records[(r.scheme, LIGHT, LIGHT)] = light
    return Histogram(m, p, Fraction(rho), idx.lam, records, dict(complement))


@dataclass
class AllocationPlan:
    """Machine counts per configuration for steps 1 and 3 of one H."""

    step1: dict
    step3: dict
    lam: int
    rho: Fraction
    k: int
    p: int
    raw_step1: int = 0
    raw_step3: int = 0
    events: list = field(default_factory=list)

    @property
    def total_step1(self) -> int:
        return sum(self.step1.values())

    @property
    def total_step3(self) -> int:
        return sum(self.step3.values())


def _fit(alloc: dict, p: int, what: str, events: list) -> dict:
    total = sum(alloc.values())
    if total <= p:
        return alloc
    events.append(f"{what}: requested {total} machines > p={p}, rescaled")
    log.info(events[-1])
    scaled = {k: max(1, floor(v * p / total)) for k, v in alloc.items()}
    if sum(scaled.values()) > p:
        events.append(f"{what}: {len(alloc)} configurations exceed p={p}, slices wrap around")
        log.info(events[-1])
    return scaled


def step1_allocation(m_eta: Mapping, p: int, lam: int, k: int, m: int, c1=None,
                     events: list | None = None) -> tuple:
    """p'_eta = ceil(p * m_eta / (c1 * m * lam**(k-2))), at least 1.

    ``c1=None`` picks the smallest constant keeping the sum near p, i.e.
    c1 * m * lam**(k-2) = sum of m_eta (never above the mass bound).
    """
    events = [] if events is None else events
    bound = m * Fraction(lam) ** (k - 2)
    total = sum(m_eta.values())
    if c1 is None:
        denom = Fraction(total) if total else bound
    else:
        denom = Fraction(c1) * bound
    raw = {cfg: max(1, ceil(p * n / denom)) for cfg, n in m_eta.items()}
    return _fit(raw, p, "step 1", events), sum(raw.values())


def step3_constant(lam: int, k: int, p: int, i_size: int) -> Fraction:
    """C2 making the sum of p''_eta at most p under the weak bound."""
    return 1 / (Fraction(lam ** k, p) + (2 ** i_size - 1))


def step3_demand(lam: int, rho, m: int, p: int, l_size: int, join_counts: Mapping) -> Fraction:
    """lam**|L| + p * sum_J |Join(Q''_J)| / (lam**(2 rho - |J| - |L|) * m**|J|)."""
    two_rho = 2 * Fraction(rho)
    if two_rho.denominator != 1:
        raise ValueError("2*rho must be an integer for a binary query")
    total = Fraction(lam) ** l_size
    for j_size, count in join_counts:
        expo = int(two_rho) - j_size - l_size
        total += Fraction(p * count) / (Fraction(lam) ** expo * m ** j_size)
    return total


def step3_allocation(demands: Mapping, c2: Fraction, p: int, events: list | None = None) -> tuple:
    events = [] if events is None else events
    raw = {cfg: min(p, max(1, ceil(c2 * d))) for cfg, d in demands.items()}
    return _fit(raw, p, "step 3", events), sum(raw.values())


def allocate_machines(m_eta: Mapping, demands: Mapping, p: int, lam: int, rho, k: int, m: int,
                      i_size: int, c1=None) -> AllocationPlan:
    events: list = []
    s1, raw1 = step1_allocation(m_eta, p, lam, k, m, c1, events)
    c2 = step3_constant(lam, k, p, i_size)
    s3, raw3 = step3_allocation(demands, c2, p, events)
    return AllocationPlan(s1, s3, lam, Fraction(rho), k, p, raw1, raw3, events)
