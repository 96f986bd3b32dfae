"""Random instance generators for almost-sparse graphs and k-SAT formulas.

Planted families hide an assignment and build the instance around it; the
hidden assignment is written to a sidecar ``.answer`` file as a ``v`` line
of signed 1-indexed literals terminated by 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .csp import CnfFormula
from .errors import InputError
from .graph import Graph

FAMILIES = ("graph-density", "planted-cut", "random-ksat", "planted-ksat")
PLANTED_CROSS_FRACTION = 0.8
_ENUM_LIMIT = 2_000_000


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    delta: float
    k: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.n < 2:
            raise InputError("n must be >= 2")
        if not 0 < self.delta <= 1:
            raise InputError(f"delta must lie in (0, 1], got {self.delta}")
        if self.family.endswith("ksat") and not 1 <= self.k <= self.n:
            raise InputError(f"k must lie in 1..n, got {self.k}")

    @property
    def target_count(self) -> int:
        if self.family in ("graph-density", "planted-cut"):
            return min(round(self.n ** (1 + self.delta) / 2), math.comb(self.n, 2))
        return round(self.n ** (self.k - 1 + self.delta))


@dataclass(frozen=True)
class Generated:
    instance: Graph | CnfFormula
    answer: tuple[int, ...] | None = None


def _pick(rng: np.random.Generator, pool: list, count: int) -> list:
    idx = rng.choice(len(pool), size=count, replace=False)
    return [pool[i] for i in sorted(idx)]


def _graph_density(spec: GenSpec, rng) -> Generated:
    pairs = list(itertools.combinations(range(spec.n), 2))
    return Generated(Graph(spec.n, tuple(_pick(rng, pairs, spec.target_count))))


def _planted_cut(spec: GenSpec, rng) -> Generated:
    n, m = spec.n, spec.target_count
    side = np.zeros(n, dtype=int)
    side[rng.permutation(n)[: n // 2]] = 1
    pairs = list(itertools.combinations(range(n), 2))
    cross = [e for e in pairs if side[e[0]] != side[e[1]]]
    same = [e for e in pairs if side[e[0]] == side[e[1]]]
    n_cross = math.ceil(PLANTED_CROSS_FRACTION * m)
    if n_cross > len(cross):
        raise InputError(f"cannot place {n_cross} crossing edges: only {len(cross)} crossing pairs exist")
    n_same = min(m - n_cross, len(same))
    n_cross = m - n_same
    edges = _pick(rng, cross, n_cross) + _pick(rng, same, n_same)
    return Generated(Graph(n, tuple(edges)), tuple(int(b) for b in side))


def _clause_pool(n: int, k: int, hidden) -> list[tuple[int, ...]]:
    pool = []
    for vs in itertools.combinations(range(1, n + 1), k):
        for signs in itertools.product((1, -1), repeat=k):
            clause = tuple(s * v for s, v in zip(signs, vs))
            if hidden is None or any((hidden[abs(l) - 1] == 1) == (l > 0) for l in clause):
                pool.append(clause)
    return pool


def _random_clause(n: int, k: int, rng, hidden) -> tuple[int, ...]:
    while True:
        vs = sorted(int(v) + 1 for v in rng.choice(n, size=k, replace=False))
        clause = tuple(v if rng.random() < 0.5 else -v for v in vs)
        if hidden is None or any((hidden[abs(l) - 1] == 1) == (l > 0) for l in clause):
            return clause


def _ksat(spec: GenSpec, rng, planted: bool) -> Generated:
    n, k, m = spec.n, spec.k, spec.target_count
    hidden = tuple(int(b) for b in rng.integers(0, 2, size=n)) if planted else None
    per_set = 2**k - 1 if planted else 2**k
    available = math.comb(n, k) * per_set
    if m > available:
        raise InputError(f"cannot draw {m} distinct {k}-clauses on {n} variables (at most {available})")
    if available <= _ENUM_LIMIT:
        clauses = _pick(rng, _clause_pool(n, k, hidden), m)
    else:
        seen: set[tuple[int, ...]] = set()
        while len(seen) < m:
            seen.add(_random_clause(n, k, rng, hidden))
        clauses = sorted(seen, key=lambda c: (tuple(abs(l) for l in c), c))
    return Generated(CnfFormula(n, tuple(clauses)), hidden)


def generate(spec: GenSpec) -> Generated:
    rng = np.random.default_rng(spec.seed)
    if spec.family == "graph-density":
        return _graph_density(spec, rng)
    if spec.family == "planted-cut":
        return _planted_cut(spec, rng)
    return _ksat(spec, rng, planted=spec.family == "planted-ksat")


def format_answer(x) -> str:
    lits = [str(i + 1) if b else str(-(i + 1)) for i, b in enumerate(x)]
    return "v " + " ".join(lits + ["0"]) + "\n"


def parse_answer(text: str, n: int | None = None) -> tuple[int, ...]:
    lits: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "cs":
            continue
        if line[0] != "v":
            raise InputError(f"line {lineno}: expected a 'v' line, got {line!r}")
        try:
            lits += [int(t) for t in line.split()[1:]]
        except ValueError:
            raise InputError(f"line {lineno}: bad literal in {line!r}") from None
    lits = [l for l in lits if l != 0]
    size = n if n is not None else len(lits)
    x = [0] * size
    seen = set()
    for l in lits:
        v = abs(l) - 1
        if not 0 <= v < size or v in seen:
            raise InputError(f"answer literal {l} out of range or repeated")
        seen.add(v)
        x[v] = int(l > 0)
    if len(seen) != size:
        raise InputError(f"answer assigns {len(seen)} of {size} variables")
    return tuple(x)
