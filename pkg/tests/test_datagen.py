import math
from collections import Counter

import pytest

from mpcjoin.datagen import DistributionError, domain_size, generate_data, parse_distribution
from mpcjoin.relcore import write_query
from mpcjoin.shapes import UnknownShape
from mpcjoin.taxonomy import classify


def test_parse():
    assert str(parse_distribution("uniform")) == "uniform"
    assert parse_distribution("zipf(1.1)").param == 1.1
    assert parse_distribution("planted-heavy(0.5)").kind == "planted-heavy"
    for bad in ("normal", "zipf(0)", "planted-heavy(2)", "zipf()"):
        with pytest.raises(DistributionError):
            parse_distribution(bad)


def test_triangle_files_reproducible(tmp_path):
    q = generate_data("triangle", 300, "uniform", 7)
    assert [len(r) for r in q.relations] == [100, 100, 100]
    write_query(tmp_path / "a", q)
    write_query(tmp_path / "b", generate_data("triangle", 300, "uniform", 7))
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_planted_value_is_heavy():
    q = generate_data("triangle", 300, "planted-heavy(0.5)", 1)
    r = q.relations[0]
    freq = Counter(row[0] for row in r.rows)
    assert freq[0] == math.ceil(0.5 * 300)
    assert classify(q, 2).is_heavy(r.scheme[0], 0)


def test_zipf_top_frequency_recount():
    q = generate_data("edge", 10000, "zipf(1.1)", 3)
    r = q.relations[0]
    manual = {}
    for a, _ in r.rows:
        manual[a] = manual.get(a, 0) + 1
    top = max(manual.values())
    assert top == Counter(row[0] for row in r.rows).most_common(1)[0][1]
    assert top > 10000 / len(manual)


def test_errors():
    with pytest.raises(UnknownShape, match="available"):
        generate_data("hexagon", 10)
    with pytest.raises(DistributionError):
        generate_data("triangle", 2)


def test_domain_size_floor():
    assert domain_size(100, 1, 2, 100) >= 15
