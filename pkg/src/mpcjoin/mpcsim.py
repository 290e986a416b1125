"""Deterministic simulator of the MPC model.

A :class:`Cluster` holds ``p`` isolated machine stores.  A round runs every
machine's compute function against its own store, gathers *all* outgoing
messages, and only then delivers them, so nothing sent in a round can depend
on something received in it.  Load is the number of 64-bit words received.
"""

from __future__ import annotations

import csv
import io
import time
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Hashable, Iterable, Sequence


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    dest: int
    payload: Sequence[int]
    tag: Hashable = None

    def __post_init__(self):
        if len(self.payload) < 1:
            raise SimulationError("message payload must hold at least one word")


@dataclass(frozen=True)
class RoundContext:
    machine: int
    p: int
    seed: int
    round_index: int
    shared: Any = None


@dataclass
class LoadReport:
    per_round: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    @property
    def round_loads(self) -> list:
        return [max(r, default=0) for r in self.per_round]

    @property
    def total_load(self) -> int:
        return sum(self.round_loads)

    @property
    def rounds(self) -> int:
        return len(self.per_round)

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "machine", "words_received"])
        for r, counts in enumerate(self.per_round):
            for mid, n in enumerate(counts):
                w.writerow([r, mid, n])
        return fh.getvalue() if own else None

    @classmethod
    def from_csv(cls, text: str) -> "LoadReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        per = defaultdict(dict)
        for row in rows:
            per[int(row["round"])][int(row["machine"])] = int(row["words_received"])
        out = cls()
        for r in sorted(per):
            width = max(per[r]) + 1
            out.per_round.append(tuple(per[r].get(i, 0) for i in range(width)))
            out.labels.append(None)
        return out

    def summary(self) -> str:
        parts = [f"{lab or 'round'}={load}" for lab, load in zip(self.labels, self.round_loads)]
        return f"total={self.total_load} [" + ", ".join(parts) + "]"


Compute = Callable[[int, Any, RoundContext], Iterable[Message]]


class Cluster:
    """p machines with private stores; rounds are delivered at a barrier.

    ``schedule`` fixes the physical order machines run in; results never
    depend on it because deliveries are applied in sender-id order.
    """

    def __init__(self, p: int, seed: int = 0, schedule: Sequence[int] | None = None):
        if p < 1:
            raise SimulationError("need at least one machine")
        self.p = p
        self.seed = seed
        self.stores = [defaultdict(list) for _ in range(p)]
        self.outputs = [set() for _ in range(p)]
        self.round_index = 0
        self.report = LoadReport()
        self.sent_words: list[int] = []
        self.wall: list[float] = []
        self.shared: Any = None
        if schedule is not None and sorted(schedule) != list(range(p)):
            raise SimulationError("schedule must be a permutation of machine ids")
        self.schedule = list(schedule) if schedule is not None else list(range(p))

    def _view(self, mid):
        return MappingProxyType(self.stores[mid])

    def run_round(self, compute: Compute, label: str | None = None) -> LoadReport:
        t0 = time.perf_counter()
        outgoing = {}
        for mid in self.schedule:
            ctx = RoundContext(mid, self.p, self.seed, self.round_index, self.shared)
            outgoing[mid] = list(compute(mid, self._view(mid), ctx) or ())
        received = [0] * self.p
        sent = 0
        for mid in range(self.p):
            for msg in outgoing[mid]:
                if not 0 <= msg.dest < self.p:
                    raise SimulationError(
                        f"round {self.round_index}: machine {mid} sent to {msg.dest}, p={self.p}")
                self.stores[msg.dest][msg.tag].extend(msg.payload)
                received[msg.dest] += len(msg.payload)
                sent += len(msg.payload)
        return self._close(received, sent, label, t0)

    def _close(self, received, sent, label, t0):
        self.report.per_round.append(tuple(received))
        self.report.labels.append(label)
        self.sent_words.append(sent)
        self.wall.append(time.perf_counter() - t0)
        self.round_index += 1
        return LoadReport([tuple(received)], [label])

    def broadcast(self, sender: int, payload: Sequence[int], tag: Hashable = None,
                  label: str | None = "broadcast") -> LoadReport:
        payload = list(payload)

        def compute(mid, store, ctx):
            if mid != sender or not payload:
                return ()
            return fanout(ctx.p, mid, payload, tag)

        return self.run_round(compute, label)

    def charge(self, words: Sequence[int], label: str | None = None) -> LoadReport:
        """Record a round whose traffic is accounted for but not simulated."""
        if len(words) != self.p:
            raise SimulationError("charge needs one count per machine")
        return self._close(list(words), sum(words), label, time.perf_counter())

    def local(self, fn: Callable[[int, Any, RoundContext], None]) -> None:
        """Communication-free pass, e.g. to emit results; not a round."""
        for mid in self.schedule:
            fn(mid, self._view(mid), RoundContext(mid, self.p, self.seed, self.round_index, self.shared))

    def emit(self, machine: int, rows: Iterable) -> None:
        self.outputs[machine].update(rows)

    def collected(self) -> set:
        out = set()
        for o in self.outputs:
            out |= o
        return out

    def load_report(self) -> LoadReport:
        return LoadReport(list(self.report.per_round), list(self.report.labels))


def fanout(p: int, sender: int, payload: Sequence[int], tag: Hashable = None) -> list[Message]:
    return [Message(d, payload, tag) for d in range(p) if d != sender]


def init_cluster(p: int, query, seed: int = 0, schedule=None) -> Cluster:
    """Spread the input tuples round-robin in canonical order.

    Machine ``i`` gets tuples ``i, i+p, ...``; store key is ``("in", scheme)``
    and rows are flattened into words.  The shared seed costs nothing.
    """
    c = Cluster(p, seed, schedule)
    k = 0
    for r in query.relations:
        for row in r.sorted_rows():
            c.stores[k % p][("in", r.scheme)].extend(row)
            k += 1
    return c


def rows_of(words: Sequence[int], arity: int) -> list[tuple]:
    if arity == 0:
        return []
    return [tuple(words[i:i + arity]) for i in range(0, len(words), arity)]
