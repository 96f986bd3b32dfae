import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from almostsparse import oracle
from almostsparse.errors import ConfigurationError, InputError
from almostsparse.graph import Graph
from almostsparse.oracle import (
    LemmaCheckParams,
    all_values,
    brute_force_kdense,
    brute_force_max,
    check_rounding_lemma,
    check_sampling_lemma,
    kdense_argmax,
)
from almostsparse.poly import SmoothPolynomial, evaluate, from_graph_maxcut

from conftest import CYCLE5, TRIANGLE, random_graph, random_poly

K4 = Graph(4, tuple(itertools.combinations(range(4), 2)))
PATH4 = Graph(4, ((0, 1), (1, 2), (2, 3)))


def naive_max(p):
    best = None
    for x in itertools.product((0, 1), repeat=p.n):
        v = evaluate(p, x)
        if best is None or v > best[1]:
            best = (x, v)
    return best


def test_triangle_and_cycle_values():
    assert brute_force_max(from_graph_maxcut(TRIANGLE))[1] == 2
    assert brute_force_max(from_graph_maxcut(CYCLE5))[1] == 4


def test_negative_linear_gives_zeros():
    p = SmoothPolynomial.from_terms(5, {(j,): -1 for j in range(5)})
    assert brute_force_max(p) == ((0,) * 5, 0)


def test_tie_break_is_lexicographic():
    # the triangle has six optimal cuts; (0, 0, 1) is the smallest
    assert brute_force_max(from_graph_maxcut(TRIANGLE))[0] == (0, 0, 1)


def test_refuses_large_n():
    p = SmoothPolynomial.from_terms(27, {(0,): 1})
    with pytest.raises(ConfigurationError, match="26"):
        brute_force_max(p)


def test_fractional_coefficients_exact():
    from fractions import Fraction

    p = SmoothPolynomial.from_terms(3, {(0,): Fraction(1, 3), (1, 2): Fraction(-1, 6), (2,): Fraction(1, 2)})
    assert brute_force_max(p) == naive_max(p)


def test_all_values_order():
    p = SmoothPolynomial.from_terms(3, {(0,): 4, (2,): 1})
    vals, scale = all_values(p)
    assert scale == 1
    assert vals.tolist() == [0, 1, 0, 1, 4, 5, 4, 5]


def test_kdense_examples():
    assert brute_force_kdense(K4, 3) == 3
    assert brute_force_kdense(PATH4, 2) == 1
    assert brute_force_kdense(PATH4, 0) == 0


def test_kdense_budget_refusal():
    with pytest.raises(ConfigurationError):
        brute_force_kdense(Graph(40), 20)
    with pytest.raises(InputError):
        brute_force_kdense(PATH4, 5)


def test_kdense_argmax_indicator():
    g = random_graph(12, 30, 0)
    x, v = kdense_argmax(g, 5)
    assert sum(x) == 5 and g.induced_edges(x) == v


def test_kdense_matches_combinations():
    for seed in range(5):
        g = random_graph(10, 20, seed)
        for k in range(1, 8):
            expect = max(g.induced_edges([int(v in s) for v in range(10)])
                         for s in itertools.combinations(range(10), k))
            assert brute_force_kdense(g, k) == expect


def test_maxcut_oracle_self_consistency():
    for seed in range(4):
        g = random_graph(12, 25, seed)
        best = max(g.cut_value(x) for x in itertools.product((0, 1), repeat=12))
        assert brute_force_max(from_graph_maxcut(g))[1] == best


def test_enumeration_above_low_bits():
    # n = 22 exercises the prefix loop
    g = random_graph(22, 40, 1)
    x, v = brute_force_max(from_graph_maxcut(g))
    assert g.cut_value(x) == v
    assert v >= 0.5 * g.m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_brute_force_matches_naive(seed, n):
    p = random_poly(n, min(3, n), np.random.default_rng(seed))
    assert brute_force_max(p) == naive_max(p)


def test_sampling_lemma_zero_coefficients():
    params = LemmaCheckParams(n=50, trials=300, seed=1)
    assert check_sampling_lemma(params, rho=np.zeros(50)).violation_count == 0


def test_sampling_lemma_full_cover():
    params = LemmaCheckParams(n=50, trials=300, seed=1, full_cover=True, alpha1=1e-9, alpha2=1e-9)
    res = check_sampling_lemma(params)
    assert res.violation_count == 0 and res.r == 50


def test_rounding_lemma_integral_y():
    params = LemmaCheckParams(n=40, trials=300, seed=2, alpha1=1e-9)
    y = (np.arange(40) % 2).astype(float)
    assert check_rounding_lemma(params, y=y).violation_count == 0
    assert check_rounding_lemma(params, rho=np.zeros(40)).violation_count == 0


def test_lemma_result_fields():
    res = check_sampling_lemma(LemmaCheckParams(n=20, trials=100))
    assert res.empirical_rate == res.violation_count / res.trials
    assert res.theoretical_budget == pytest.approx(4 / 20**3)
    assert set(res.to_dict()) >= {"violation_count", "trials", "empirical_rate", "theoretical_budget"}


def test_lemma_sample_size_formula():
    params = LemmaCheckParams(n=100, q=0, beta=1, delta=0.5, alpha1=0.5, alpha2=0.5)
    gamma = 3 * 3 * 1 * 1 / (0.25 * 0.5)
    assert params.sample_size() == math.ceil(gamma * 10 * math.log(100))


def test_lemma_params_validation():
    with pytest.raises(InputError):
        LemmaCheckParams(trials=0)
    with pytest.raises(InputError):
        LemmaCheckParams(delta=1.5)
    with pytest.raises(InputError):
        LemmaCheckParams(beta=0.5)


def test_small_sample_does_violate():
    # a tiny fixed sample and tight alphas must show violations, so the checker is not vacuous
    params = LemmaCheckParams(n=100, trials=500, r=2, alpha1=0.01, alpha2=0.01)
    assert check_sampling_lemma(params).violation_count > 0
    assert check_rounding_lemma(LemmaCheckParams(n=100, trials=500, alpha1=0.001)).violation_count > 0


@pytest.mark.parametrize("check", [check_sampling_lemma, check_rounding_lemma])
def test_monotone_widening(check):
    counts = [check(LemmaCheckParams(n=60, trials=400, r=6, alpha1=a, alpha2=a, seed=3)).violation_count
              for a in (0.005, 0.02, 0.05, 0.2, 0.5)]
    assert counts == sorted(counts, reverse=True)


def test_budgets_exposed():
    assert oracle.MAX_ENUM_N == 26 and oracle.KDENSE_BUDGET == 5_000_000
