"""Synthetic relation generator for the named shapes.

The domain size is picked so that the expected join size is near a target
(by default m): with n tuples per relation over a domain of d values the
expectation is about n**|E| * d**(k - 2|E|).
"""

from __future__ import annotations

import logging
import math
import random
import re
from bisect import bisect_left
from dataclasses import dataclass
from itertools import accumulate

from .relcore import JoinQuery, Relation
from .shapes import shape_edges

log = logging.getLogger(__name__)

MAX_DOMAIN = 2 ** 32


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class Distribution:
    kind: str                 # uniform | zipf | planted-heavy
    param: float | None = None

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"


def parse_distribution(text: str) -> Distribution:
    text = text.strip().lower()
    if text == "uniform":
        return Distribution("uniform")
    mt = re.fullmatch(r"(zipf|planted-heavy)\(([0-9.]+)\)", text)
    if not mt:
        raise DistributionError(f"bad distribution {text!r}; use uniform, zipf(s) or planted-heavy(f)")
    kind, val = mt.group(1), float(mt.group(2))
    if kind == "zipf" and val <= 0:
        raise DistributionError("zipf exponent must be positive")
    if kind == "planted-heavy" and not 0 < val <= 1:
        raise DistributionError("planted-heavy fraction must lie in (0, 1]")
    return Distribution(kind, val)


def domain_size(n: int, edges: int, k: int, target: int) -> int:
    """d with n**edges * d**(k - 2 edges) close to target, clamped so n distinct pairs fit."""
    floor_d = max(2, math.isqrt(2 * n) + 1)
    expo = k - 2 * edges
    if expo == 0:
        return floor_d
    logd = (math.log(max(target, 1)) - edges * math.log(max(n, 1))) / expo
    d = int(round(math.exp(min(logd, math.log(MAX_DOMAIN)))))
    return max(floor_d, min(d, MAX_DOMAIN))


class _Sampler:
    def __init__(self, rng: random.Random, d: int, dist: Distribution):
        self.rng, self.d = rng, d
        self.cum = None
        if dist.kind == "zipf":
            self.cum = list(accumulate(1.0 / (i + 1) ** dist.param for i in range(d)))

    def value(self) -> int:
        if self.cum is None:
            return self.rng.randrange(self.d)
        return bisect_left(self.cum, self.rng.random() * self.cum[-1])


def _fill(rng, sampler, n, rows, avoid_first=None):
    attempts = 0
    limit = 100 * n + 1000
    while len(rows) < n and attempts < limit:
        attempts += 1
        a, b = sampler.value(), sampler.value()
        if a == avoid_first:
            continue
        rows.add((a, b))
    if len(rows) < n:
        # too concentrated to find enough distinct pairs; finish uniformly
        log.info("distribution saturated after %d draws; %d tuples drawn uniformly",
                 attempts, n - len(rows))
        while len(rows) < n:
            a = rng.randrange(sampler.d)
            if a != avoid_first:
                rows.add((a, rng.randrange(sampler.d)))
    return rows


def generate_edges(edges, m: int, dist: Distribution, seed: int, target: int | None = None) -> JoinQuery:
    if m < len(edges):
        raise DistributionError(f"m={m} is smaller than the number of relations ({len(edges)})")
    rng = random.Random(seed)
    edges = [tuple(sorted(e)) for e in edges]
    k = len({a for e in edges for a in e})
    planted = 0
    if dist.kind == "planted-heavy":
        planted = math.ceil(dist.param * m)
        if planted > m - (len(edges) - 1):
            raise DistributionError("planted fraction leaves no room for the other relations")
    rest = m - planted
    sizes = [rest // len(edges) + (1 if i < rest % len(edges) else 0) for i in range(len(edges))]
    n = max(1, max(sizes))
    d = domain_size(n, len(edges), k, target or m)
    sampler = _Sampler(rng, d, dist)
    rels = []
    for i, (e, size) in enumerate(zip(edges, sizes)):
        rows = set()
        if i == 0 and planted:
            # value 0 on the first attribute, with distinct partners
            rows = {(0, y) for y in range(planted)}
            rows = _fill(rng, sampler, planted + size, rows, avoid_first=0)
        else:
            rows = _fill(rng, sampler, size, rows)
        rels.append(Relation(e, frozenset(rows), "R_" + "".join(e)))
    return JoinQuery(tuple(rels))


def generate_data(shape: str, m: int, dist: Distribution | str = "uniform", seed: int = 0,
                  target: int | None = None) -> JoinQuery:
    if isinstance(dist, str):
        dist = parse_distribution(dist)
    return generate_edges(shape_edges(shape), m, dist, seed, target)
