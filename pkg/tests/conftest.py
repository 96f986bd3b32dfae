import itertools

import numpy as np
import pytest

from almostsparse.graph import Graph
from almostsparse.poly import SmoothPolynomial
from almostsparse.relaxation import RelaxProgram, Row

_ACCEPTANCE_LINES: list[str] = []


def random_graph(n: int, m: int, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    idx = rng.choice(len(pairs), size=min(m, len(pairs)), replace=False)
    return Graph(n, tuple(pairs[i] for i in sorted(idx)))


def random_poly(n: int, d: int, rng: np.random.Generator, terms: int | None = None,
                lo: int = -5, hi: int = 5) -> SmoothPolynomial:
    """Integer-coefficient polynomial of degree exactly ``d`` (when ``d <= n``)."""
    terms = terms if terms is not None else int(rng.integers(1, 3 * n))
    acc = {(): int(rng.integers(lo, hi + 1))}
    top = tuple(sorted(rng.choice(n, size=d, replace=False).tolist()))
    acc[top] = int(rng.choice([c for c in range(lo, hi + 1) if c]))
    for _ in range(terms):
        deg = int(rng.integers(1, d + 1))
        vs = tuple(sorted(rng.choice(n, size=deg, replace=False).tolist()))
        acc[vs] = acc.get(vs, 0) + int(rng.integers(lo, hi + 1))
    if acc[top] == 0:
        acc[top] = 1
    return SmoothPolynomial.from_terms(n, acc)


def random_program(rng, n_max=8, m_max=10) -> RelaxProgram:
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    rows = []
    for _ in range(m):
        a = rng.integers(-3, 4, n).astype(float)
        lo = float(rng.uniform(-3, 2))
        hi = lo + float(rng.uniform(0, 3))
        if rng.random() < 0.15:
            hi = lo
        rows.append(Row(tuple((j, float(a[j])) for j in range(n) if a[j]), lo, hi, lo, hi))
    return RelaxProgram(n, 0.0, rng.normal(size=n), tuple(rows))


TRIANGLE = Graph(3, ((0, 1), (0, 2), (1, 2)))
CYCLE5 = Graph(5, tuple((i, (i + 1) % 5) if i < 4 else (0, 4) for i in range(5)))
EDGE = Graph(2, ((0, 1),))


@pytest.fixture
def acceptance_line():
    """Record a pass/fail line that is echoed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
