import pytest

from almostsparse import generate as gen_module
from almostsparse.csp import count_satisfied, format_dimacs_cnf, parse_dimacs_cnf
from almostsparse.errors import InputError
from almostsparse.generate import GenSpec, format_answer, generate, parse_answer
from almostsparse.graph import format_graph, parse_graph


def test_graph_density_capped_at_complete():
    g = generate(GenSpec("graph-density", 16, 1.0)).instance
    assert g.m == 120


def test_graph_density_count():
    spec = GenSpec("graph-density", 20, 0.5, seed=3)
    assert generate(spec).instance.m == round(20**1.5 / 2) == spec.target_count


def test_random_ksat_count_and_distinct():
    f = generate(GenSpec("random-ksat", 14, 0.5, k=2, seed=7)).instance
    assert f.m == 52
    assert len(set(f.clauses)) == 52
    assert all(len(c) == 2 for c in f.clauses)


def test_planted_cut_crossing_fraction():
    for seed in range(10):
        out = generate(GenSpec("planted-cut", 10, 0.5, seed=seed))
        g, side = out.instance, out.answer
        assert len(side) == 10 and sum(side) == 5
        assert g.cut_value(side) >= 0.8 * g.m


def test_planted_ksat_is_satisfied_by_answer():
    for seed in range(5):
        out = generate(GenSpec("planted-ksat", 12, 0.5, k=3, seed=seed))
        assert count_satisfied(out.instance, out.answer) == out.instance.m


@pytest.mark.parametrize("family", ["random-ksat", "planted-ksat"])
def test_rejection_sampling_path(monkeypatch, family):
    # force the path used when the clause pool is too large to list
    monkeypatch.setattr(gen_module, "_ENUM_LIMIT", 10)
    out = generate(GenSpec(family, 12, 0.5, k=3, seed=1))
    f = out.instance
    assert f.m == round(12**2.5) and len(set(f.clauses)) == f.m
    if out.answer is not None:
        assert count_satisfied(f, out.answer) == f.m


def test_reproducible():
    a = generate(GenSpec("random-ksat", 10, 0.7, k=3, seed=4))
    b = generate(GenSpec("random-ksat", 10, 0.7, k=3, seed=4))
    assert a == b


@pytest.mark.parametrize("spec", [
    GenSpec("graph-density", 12, 0.8, seed=2),
    GenSpec("planted-cut", 12, 0.8, seed=2),
])
def test_graph_round_trip(spec):
    g = generate(spec).instance
    assert parse_graph(format_graph(g)) == g


@pytest.mark.parametrize("family", ["random-ksat", "planted-ksat"])
def test_cnf_round_trip(family):
    f = generate(GenSpec(family, 11, 0.6, k=3, seed=9)).instance
    assert parse_dimacs_cnf(format_dimacs_cnf(f)) == f


def test_answer_round_trip():
    x = (1, 0, 0, 1, 1)
    assert format_answer(x) == "v 1 -2 -3 4 5 0\n"
    assert parse_answer(format_answer(x)) == x
    assert parse_answer("c note\nv 1 -2\nv 3 0\n", 3) == (1, 0, 1)


@pytest.mark.parametrize("text", ["v 1 2 0\n", "x 1 0\n", "v 1 1 -2 0\n", "v 1 q 0\n"])
def test_answer_errors(text):
    with pytest.raises(InputError):
        parse_answer(text, 3)


def test_invalid_specs():
    with pytest.raises(InputError):
        GenSpec("no-such", 10, 0.5)
    with pytest.raises(InputError):
        GenSpec("graph-density", 10, 0.0)
    with pytest.raises(InputError):
        generate(GenSpec("random-ksat", 3, 1.0, k=3))  # 9 wanted, only 8 exist
