"""Hand-built instances shared by several test modules."""

from mpcjoin.datagen import generate_data
from mpcjoin.relcore import JoinQuery, Relation

# heavy value 0 planted on D, E, F, K through one cross edge each, plus
# smaller batches on the edges reaching the isolated G, H, L
PLANTS = {("A", "D"): ("D", 300), ("A", "E"): ("E", 300), ("C", "F"): ("F", 300),
          ("B", "K"): ("K", 300), ("D", "G"): ("D", 40), ("F", "G"): ("F", 40),
          ("G", "K"): ("K", 40), ("E", "H"): ("E", 40), ("E", "L"): ("E", 40)}


def planted_fig1a(seed: int = 0, base_m: int = 1000) -> JoinQuery:
    base = generate_data("fig1a", base_m, "uniform", seed)
    rels = []
    for r in base.relations:
        rows = set(r.rows)
        if r.scheme in PLANTS:
            attr, n = PLANTS[r.scheme]
            pos = r.scheme.index(attr)
            for y in range(n):
                rows.add((0, y) if pos == 0 else (y, 0))
        rels.append(Relation(r.scheme, frozenset(rows), r.name))
    return JoinQuery(tuple(rels))
