import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from almostsparse.errors import InputError
from almostsparse.estimator import Sample, draw_sample, estimate
from almostsparse.oracle import lp_vertex_max
from almostsparse.poly import MAXCUT_SYMMETRIC, decompose, evaluate_real, from_graph_kdense, from_graph_maxcut
from almostsparse.relaxation import (
    GENERIC,
    KDENSE,
    MAXCUT,
    RelaxProgram,
    Row,
    build_program,
    format_program,
    min_widening,
    power_of_two_factor,
    solve,
    solve_widened,
)
from almostsparse.simplex import simplex_max, simplex_two_stage

from conftest import EDGE, random_graph, random_poly, random_program


def edge_program():
    tree = decompose(from_graph_maxcut(EDGE), MAXCUT_SYMMETRIC)
    # n / r = 1 and x_2 = 1 on the sample: neighbour estimates 1 (vertex 1) and 0 (vertex 2)
    est = estimate(tree, Sample(2, (1, 1)), {1: 1})
    return tree, est, build_program(tree, est, 0.1, 0.1, 1.0, MAXCUT)


def test_single_edge_program_rows():
    _, _, prog = edge_program()
    rows = {r.label: r for r in prog.rows}
    v1, v2 = rows["vertex 0"], rows["vertex 1"]
    assert v1.coeffs == ((1, 1.0),) and v2.coeffs == ((0, 1.0),)
    assert (v1.lower, v1.upper) == pytest.approx((0.8, 1.0))
    assert (v2.lower, v2.upper) == pytest.approx((0.0, 0.1))
    assert prog.objective.tolist() == pytest.approx([0.0, 1.0])


def test_single_edge_solution():
    _, _, prog = edge_program()
    sol = solve(prog)
    assert sol.optimal
    assert sol.y.tolist() == pytest.approx([0.0, 1.0])
    assert sol.objective_value == pytest.approx(1.0)


def test_infeasible_program():
    prog = RelaxProgram(1, 0.0, np.ones(1), (Row(((0, 1.0),), 0.7, 0.6, 0.7, 0.6),))
    assert solve(prog).status == "infeasible"
    prog = RelaxProgram(2, 0.0, np.ones(2), (Row(((0, 1.0), (1, 1.0)), 2.5, 3.0, 2.5, 3.0),))
    assert solve(prog).status == "infeasible"


def test_unconstrained_box():
    sol = solve(RelaxProgram(5, 0.0, np.ones(5), ()))
    assert sol.y.tolist() == [1.0] * 5 and sol.objective_value == 5


def test_solve_rejects_bad_tolerance():
    with pytest.raises(InputError):
        solve(RelaxProgram(1, 0.0, np.ones(1), ()), tol=0)


def test_generic_absent_tuples_emit_nothing():
    from almostsparse.poly import SmoothPolynomial

    p = SmoothPolynomial.from_terms(5, {(0, 1, 2): 1, (3,): 2})
    tree = decompose(p)
    est = estimate(tree, Sample(5, tuple(range(5))), {j: 1 for j in range(5)})
    prog = build_program(tree, est, 0.1, 0.1, 0.5, GENERIC)
    # (3,) is materialized by the linear term; (1,), (2,) and (4,) are absent
    assert sorted(r.label for r in prog.rows) == ["node (0, 1)", "node (0,)", "node (3,)"]


def test_kdense_has_one_cardinality_row():
    g = random_graph(9, 15, 0)
    tree = decompose(from_graph_kdense(g), MAXCUT_SYMMETRIC)
    sample = draw_sample(9, 4, np.random.default_rng(0))
    est = estimate(tree, sample, {j: 1 for j in sample.distinct})
    prog = build_program(tree, est, 0.1, 0.1, 0.5, KDENSE, k=4)
    card = [r for r in prog.rows if r.label == "cardinality"]
    assert len(card) == 1
    assert card[0].lower == card[0].upper == 4
    assert card[0].coeffs == tuple((j, 1.0) for j in range(9))


def test_build_program_errors():
    tree, est, _ = edge_program()
    with pytest.raises(InputError):
        build_program(tree, est, 0.0, 0.1, 1.0, MAXCUT)
    with pytest.raises(InputError):
        build_program(tree, est, 0.1, 0.1, 1.0, "weighted")
    with pytest.raises(InputError):
        build_program(tree, est, 0.1, 0.1, 1.0, KDENSE, k=5)


def test_format_program_mentions_rows():
    _, _, prog = edge_program()
    text = format_program(prog)
    assert "vertex 0" in text and "max" in text.lower()


def test_simplex_equality_and_bounds():
    # max x + y  s.t. x + y = 1.5, x <= 1, y <= 1, x - y <= 0
    res = simplex_max([1, 1], [[1, -1]], [0], [[1, 1]], [1.5], upper=[1, 1])
    assert res.status == "optimal" and res.objective == pytest.approx(1.5)
    assert res.x[0] <= res.x[1] + 1e-9


def test_simplex_detects_infeasible_equalities():
    res = simplex_max([1, 0], None, None, [[1, 1], [1, 1]], [1, 2])
    assert res.status == "infeasible"


def test_simplex_redundant_equalities():
    res = simplex_max([1, 2], None, None, [[1, 1], [2, 2]], [1, 2], upper=[1, 1])
    assert res.status == "optimal" and res.objective == pytest.approx(2.0)


def test_two_stage_keeps_basis_feasible():
    # first minimize t subject to t >= 1 - x and t >= x - 0.2, then cap t and maximize x
    c1, c2 = [0, -1], [1, 0]
    A = [[-1, -1], [1, -1]]
    b = [-1, 0.2]
    first, second = simplex_two_stage(c1, c2, lambda x: [1, max(0.5, x[1])], A, b,
                                      upper=[1, np.inf], start_col=1)
    assert first.objective == pytest.approx(-0.4)
    assert second.x[0] == pytest.approx(0.7)


def test_power_of_two_factor():
    assert power_of_two_factor(0.3) == 1
    assert power_of_two_factor(1.0) == 1
    assert power_of_two_factor(1.01) == 2
    assert power_of_two_factor(4.0) == 4
    assert power_of_two_factor(5.5) == 8


def test_min_widening_of_feasible_program_at_most_one():
    g = random_graph(10, 20, 5)
    tree = decompose(from_graph_maxcut(g), MAXCUT_SYMMETRIC)
    x = (0, 1) * 5
    est = estimate(tree, Sample(10, tuple(range(10))), dict(enumerate(x)))
    prog = build_program(tree, est, 0.05, 0.05, 1.0, MAXCUT)
    assert min_widening(prog) <= 1 + 1e-9
    factor, sol = solve_widened(prog)
    assert factor == 1 and sol.optimal
    assert sol.objective_value == pytest.approx(solve(prog).objective_value)


def test_widened_solution_matches_rebuilt_program():
    rng = np.random.default_rng(2)
    g = random_graph(12, 30, 2)
    tree = decompose(from_graph_maxcut(g), MAXCUT_SYMMETRIC)
    checked = 0
    for _ in range(30):
        sample = draw_sample(12, 3, rng)
        est = estimate(tree, sample, {j: int(rng.integers(0, 2)) for j in sample.distinct})
        prog = build_program(tree, est, 0.01, 0.01, 1.0, MAXCUT)
        factor, sol = solve_widened(prog)
        if factor == 1 or not math.isfinite(factor):
            continue
        wide = build_program(tree, est, 0.01 * factor, 0.01 * factor, 1.0, MAXCUT)
        direct = solve(wide)
        assert direct.optimal
        assert sol.objective_value == pytest.approx(direct.objective_value, abs=1e-6)
        assert solve(build_program(tree, est, 0.01 * factor / 2, 0.01 * factor / 2, 1.0,
                                   MAXCUT)).status == "infeasible"
        checked += 1
    assert checked > 5


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solver_matches_vertex_oracle(seed):
    prog = random_program(np.random.default_rng(seed), n_max=5, m_max=6)
    sol = solve(prog)
    status, value = lp_vertex_max(prog)
    assert sol.status == status
    if status == "optimal":
        assert sol.objective_value == pytest.approx(value, abs=1e-6)
        assert prog.violations(sol.y).max(initial=0) <= 1e-6


def test_lp_dominates_feasible_integral_points():
    rng = np.random.default_rng(7)
    for seed in range(10):
        p = random_poly(8, 3, rng)
        tree = decompose(p)
        sample = draw_sample(8, 4, rng)
        est = estimate(tree, sample, {j: int(rng.integers(0, 2)) for j in sample.distinct})
        prog = build_program(tree, est, 0.2, 0.2, 1.0, GENERIC)
        sol = solve(prog)
        for x in itertools.product((0, 1), repeat=8):
            if prog.violations(x).max(initial=0) <= 1e-9:
                assert sol.optimal
                assert sol.objective_value >= prog.objective_value(x) - 1e-6


def test_maxcut_objective_deviation_bound():
    # |p(y) - objective(y)| <= 2 (eps1 + eps2) m for feasible fractional y
    rng = np.random.default_rng(3)
    eps1 = eps2 = 0.05
    for seed in range(20):
        g = random_graph(16, 64, seed)
        p = from_graph_maxcut(g)
        tree = decompose(p, MAXCUT_SYMMETRIC)
        x = tuple(int(b) for b in rng.integers(0, 2, 16))
        sample = draw_sample(16, 16, rng)
        est = estimate(tree, sample, {j: x[j] for j in sample.distinct})
        prog = build_program(tree, est, eps1, eps2, 1.0, MAXCUT)
        sol = solve(prog)
        if not sol.optimal:
            continue
        assert abs(evaluate_real(p, sol.y) - sol.objective_value) <= 2 * (eps1 + eps2) * g.m + 1e-6


def test_generic_objective_deviation_bound():
    # |p(y) - (c + sum y_j rho_j)| <= eps1 sum t_bar + (d-1) eps2 n^(d-1+delta)
    rng = np.random.default_rng(9)
    eps1, eps2, delta = 0.05, 0.05, 1.0
    for _ in range(20):
        p = random_poly(9, 3, rng)
        tree = decompose(p)
        x = tuple(int(b) for b in rng.integers(0, 2, 9))
        sample = draw_sample(9, 6, rng)
        est = estimate(tree, sample, {j: x[j] for j in sample.distinct})
        prog = build_program(tree, est, eps1, eps2, delta, GENERIC)
        sol = solve(prog)
        if not sol.optimal:
            continue
        bound = eps1 * est.top_t_bar_sum() + (p.d - 1) * eps2 * 9 ** (p.d - 1 + delta)
        assert abs(evaluate_real(p, sol.y) - sol.objective_value) <= bound + 1e-6
