"""Named query shapes, as edge lists over single-letter attributes."""

from __future__ import annotations

from .hypergraph import Hypergraph

FIG1A_EDGES = (
    "AB", "AC", "BC", "IJ", "DK", "AD", "AE", "DG", "FG",
    "EH", "EL", "BE", "BK", "CF", "CK", "ID", "IF", "GK",
)

SHAPES = {
    "edge": ("AB",),
    "path3": ("AB", "BC"),
    "triangle": ("AB", "BC", "AC"),
    "cycle4": ("AB", "BC", "CD", "AD"),
    "clique4": ("AB", "AC", "AD", "BC", "BD", "CD"),
    "star": ("AB", "AC", "AD"),
    "fig1a": FIG1A_EDGES,
}


class UnknownShape(KeyError):
    def __str__(self):
        return f"unknown shape {self.args[0]!r}; available: {', '.join(sorted(SHAPES))}"


def shape_edges(name: str) -> list:
    try:
        return [tuple(sorted(e)) for e in SHAPES[name]]
    except KeyError:
        raise UnknownShape(name) from None


def shape_hypergraph(name: str) -> Hypergraph:
    return Hypergraph.from_edges(shape_edges(name))


def cycle_edges(n: int) -> list:
    names = [f"X{i}" for i in range(n)]
    return [tuple(sorted((names[i], names[(i + 1) % n]))) for i in range(n)]


def clique_edges(n: int) -> list:
    names = [f"X{i}" for i in range(n)]
    return [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
