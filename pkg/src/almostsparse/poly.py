"""Sparse multilinear polynomials over binary vectors.

Coefficients are exact: plain ``int`` when integral, ``fractions.Fraction``
otherwise. Graph and CSP instances only ever produce integers, except for the
half-weights of the symmetric degree-2 decomposition.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .graph import Graph

Coeff = int | Fraction

CANONICAL_LEX = "canonical-lex"
MAXCUT_SYMMETRIC = "maxcut-symmetric"
STRATEGIES = (CANONICAL_LEX, MAXCUT_SYMMETRIC)

# coefficients must fit 64-bit signed arithmetic
COEFF_LIMIT = 2**63 - 1


def exact(value) -> Coeff:
    """Normalize a number to ``int`` when integral, else ``Fraction``."""
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and not math.isfinite(value):
        raise InputError(f"non-finite coefficient {value!r}")
    f = Fraction(value)
    return f.numerator if f.denominator == 1 else f


@dataclass(frozen=True)
class Monomial:
    vars: tuple[int, ...]
    coeff: Coeff

    def __post_init__(self):
        vs = tuple(int(v) for v in self.vars)
        if any(a >= b for a, b in zip(vs, vs[1:])):
            raise InputError(f"monomial variables must be strictly increasing: {vs}")
        c = exact(self.coeff)
        if c == 0:
            raise InputError("monomial coefficient must be nonzero")
        object.__setattr__(self, "vars", vs)
        object.__setattr__(self, "coeff", c)

    @property
    def degree(self) -> int:
        return len(self.vars)


@dataclass(frozen=True)
class SmoothPolynomial:
    """``constant + sum(coeff * prod(x_i for i in vars))`` over ``x`` in ``{0,1}^n``.

    Monomials are kept sorted by ``(degree, vars)``; var-sets are distinct
    and nonempty (the degree-0 term lives in ``constant``).
    """

    n: int
    constant: Coeff = 0
    monomials: tuple[Monomial, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "constant", exact(self.constant))
        mons = tuple(sorted(self.monomials, key=lambda m: (m.degree, m.vars)))
        seen = set()
        for m in mons:
            if not m.vars:
                raise InputError("degree-0 monomials belong in the constant")
            if m.vars[-1] >= self.n or m.vars[0] < 0:
                raise InputError(f"monomial {m.vars} out of range for n={self.n}")
            if m.vars in seen:
                raise InputError(f"duplicate monomial {m.vars}")
            seen.add(m.vars)
        object.__setattr__(self, "monomials", mons)

    @classmethod
    def from_terms(cls, n: int, terms) -> SmoothPolynomial:
        """Build from ``(vars, coeff)`` pairs or a mapping, merging like terms.

        Repeated variables inside a term collapse (``x*x = x`` on binary inputs).
        """
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, ...], Coeff] = defaultdict(int)
        for vs, c in items:
            acc[tuple(sorted(set(vs)))] += exact(c)
        constant = acc.pop((), 0)
        mons = [Monomial(vs, c) for vs, c in acc.items() if c != 0]
        return cls(n, constant, tuple(mons))

    @property
    def d(self) -> int:
        return max((m.degree for m in self.monomials), default=0)

    @property
    def is_constant(self) -> bool:
        return not self.monomials

    def terms(self) -> dict[tuple[int, ...], Coeff]:
        out = {m.vars: m.coeff for m in self.monomials}
        if self.constant:
            out[()] = self.constant
        return out

    def coefficient(self, vars: Iterable[int]) -> Coeff:
        key = tuple(sorted(vars))
        if not key:
            return self.constant
        for m in self.monomials:
            if m.vars == key:
                return m.coeff
        return 0

    def degree_sums(self) -> list[Coeff]:
        """Sum of absolute coefficients for each degree ``0..d``."""
        sums: list[Coeff] = [0] * (self.d + 1)
        sums[0] = abs(self.constant)
        for m in self.monomials:
            sums[m.degree] += abs(m.coeff)
        return sums


def _check_assignment(p: SmoothPolynomial, x: Sequence) -> None:
    if len(x) != p.n:
        raise InputError(f"assignment has length {len(x)}, polynomial has n={p.n}")


def evaluate(p: SmoothPolynomial, x: Sequence[int]) -> Coeff:
    """Exact value of ``p`` at a binary vector."""
    _check_assignment(p, x)
    bits = [int(v) for v in x]
    if any(b not in (0, 1) for b in bits):
        raise InputError("assignment must be binary")
    total = p.constant
    for m in p.monomials:
        if all(bits[i] for i in m.vars):
            total += m.coeff
    return exact(total)


def evaluate_real(p: SmoothPolynomial, y: Sequence[float]) -> float:
    """Multilinear extension of ``p`` at a point of ``[0,1]^n`` (floating point)."""
    _check_assignment(p, y)
    total = float(p.constant)
    for m in p.monomials:
        t = float(m.coeff)
        for i in m.vars:
            t *= y[i]
        total += t
    return total


class BatchEvaluator:
    """Floating-point values of ``p`` at many binary points at once.

    Exact only while partial sums stay below 2**53; used to rank candidate
    vectors, never to report values.
    """

    def __init__(self, p: SmoothPolynomial):
        self.n = p.n
        self.constant = float(p.constant)
        groups: dict[int, tuple[list, list]] = defaultdict(lambda: ([], []))
        for m in p.monomials:
            groups[m.degree][0].append(m.vars)
            groups[m.degree][1].append(float(m.coeff))
        self.groups = [(np.array(vs, dtype=np.int64), np.array(cs)) for vs, cs in groups.values()]

    def __call__(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        out = np.full(Z.shape[0], self.constant)
        for vs, cs in self.groups:
            out += Z[:, vs].prod(axis=2) @ cs
        return out


@dataclass(frozen=True)
class SmoothnessCertificate:
    """``beta``-smoothness and ``delta``-boundedness witnessed on one polynomial.

    ``kappa`` is the hidden constant of the boundedness condition: every
    degree-``l`` absolute coefficient sum is at most
    ``kappa * beta * n**(d-1+delta)``.
    """

    beta: float
    delta: float
    kappa: float
    d: int
    n: int

    def verify(self, p: SmoothPolynomial, rtol: float = 1e-9) -> bool:
        if p.n != self.n or p.d != self.d:
            return False
        if self.beta < 1 or self.kappa < 1 or not (0 < self.delta <= 1):
            return False
        n, d = self.n, self.d
        slack = 1 + rtol
        if abs(p.constant) > self.beta * n**d * slack:
            return False
        for m in p.monomials:
            if abs(m.coeff) > self.beta * n ** (d - m.degree) * slack:
                return False
        cap = self.kappa * self.beta * n ** (d - 1 + self.delta) * slack
        return all(s <= cap for s in p.degree_sums())


def certify(p: SmoothPolynomial, delta: float) -> SmoothnessCertificate:
    """Minimal ``beta >= 1`` and ``kappa >= 1`` for ``p`` at density exponent ``delta``."""
    if p.is_constant:
        raise InputError("cannot certify a constant polynomial")
    if not (0 < delta <= 1):
        raise InputError(f"delta must lie in (0, 1], got {delta}")
    n, d = p.n, p.d
    beta = Fraction(1)
    beta = max(beta, Fraction(abs(p.constant)) / n**d)
    for m in p.monomials:
        beta = max(beta, Fraction(abs(m.coeff)) / n ** (d - m.degree))
    beta_f = float(beta)
    scale = beta_f * n ** (d - 1 + delta)
    kappa = max([1.0] + [float(s) / scale for s in p.degree_sums()])
    return SmoothnessCertificate(beta=beta_f, delta=float(delta), kappa=kappa, d=d, n=n)


@dataclass(frozen=True)
class DecompNode:
    key: tuple[int, ...]
    level: int
    constant: Coeff
    children: tuple[int, ...]


@dataclass(frozen=True)
class DecompositionTree:
    """Recursive ``p = c + sum_j x_j p_j`` structure, sparse over occurring tuples.

    ``nodes`` maps index tuples to nodes; the root is ``()`` at level ``d``
    and a tuple of length ``t`` sits at level ``d - t``. Level-0 nodes are
    leaves carrying the top-degree coefficients. Tuples that are not
    materialized denote the zero polynomial.
    """

    n: int
    d: int
    strategy: str
    nodes: Mapping[tuple[int, ...], DecompNode]
    beta: float = 1.0

    @property
    def root(self) -> DecompNode:
        return self.nodes[()]

    def at_level(self, level: int) -> list[DecompNode]:
        return [nd for nd in self.nodes.values() if nd.level == level]

    def internal_nodes(self) -> list[DecompNode]:
        """Nodes at levels ``1..d-1``: the ones that carry a relaxation row."""
        return [nd for nd in self.nodes.values() if 1 <= nd.level < self.d]

    def subpolynomial(self, key: tuple[int, ...] = ()) -> SmoothPolynomial:
        """Reassemble the polynomial rooted at ``key``."""
        terms: dict[tuple[int, ...], Coeff] = defaultdict(int)

        def walk(k, prefix):
            nd = self.nodes[k]
            terms[tuple(sorted(prefix))] += nd.constant
            for j in nd.children:
                walk(k + (j,), prefix | {j})

        walk(key, frozenset())
        return SmoothPolynomial.from_terms(self.n, terms)

    def node_value(self, key: tuple[int, ...], x: Sequence[int]) -> Coeff:
        """Value of the node's polynomial at ``x`` computed through the tree."""
        nd = self.nodes[key]
        return exact(nd.constant + sum(
            self.node_value(key + (j,), x) for j in nd.children if x[j]
        ))


def decompose(p: SmoothPolynomial, strategy: str = CANONICAL_LEX) -> DecompositionTree:
    """Build the recursive decomposition of ``p``.

    ``canonical-lex`` routes every monomial down the chain of its sorted
    variables. ``maxcut-symmetric`` is for degree-2 polynomials: each
    quadratic term ``t x_i x_j`` is split as ``t/2`` into both ``p_i`` and
    ``p_j``. On a Max-Cut polynomial this gives ``p_j = deg(j) - sum of
    neighbours``.
    """
    if strategy not in STRATEGIES:
        raise InputError(f"unknown strategy {strategy!r}")
    d = p.d
    constants: dict[tuple[int, ...], Coeff] = defaultdict(int)
    children: dict[tuple[int, ...], set[int]] = defaultdict(set)
    constants[()] = p.constant

    if strategy == CANONICAL_LEX:
        for m in p.monomials:
            key: tuple[int, ...] = ()
            for v in m.vars:
                children[key].add(v)
                key = key + (v,)
                constants.setdefault(key, 0)
            constants[key] += m.coeff
    else:
        if d != 2:
            raise InputError(f"{MAXCUT_SYMMETRIC} needs a degree-2 polynomial, got degree {d}")
        for m in p.monomials:
            if m.degree == 1:
                (j,) = m.vars
                children[()].add(j)
                constants[(j,)] += m.coeff
            else:
                i, j = m.vars
                half = exact(Fraction(m.coeff) / 2)
                for a, b in ((i, j), (j, i)):
                    children[()].add(a)
                    constants.setdefault((a,), 0)
                    children[(a,)].add(b)
                    constants[(a, b)] += half

    nodes = {
        k: DecompNode(k, d - len(k), exact(c), tuple(sorted(children.get(k, ()))))
        for k, c in constants.items()
    }
    beta = certify(p, 1.0).beta if not p.is_constant else 1.0
    return DecompositionTree(p.n, d, strategy, nodes, beta)


def from_graph_maxcut(g: Graph) -> SmoothPolynomial:
    """``sum over edges of x_i + x_j - 2 x_i x_j``: the cut size of ``x``."""
    terms: dict[tuple[int, ...], int] = {}
    for v in range(g.n):
        if g.degree(v):
            terms[(v,)] = g.degree(v)
    for u, v in g.edges:
        terms[(u, v)] = -2
    return SmoothPolynomial.from_terms(g.n, terms)


def from_graph_kdense(g: Graph) -> SmoothPolynomial:
    """``sum over edges of x_i x_j``: edges induced by the support of ``x``."""
    return SmoothPolynomial.from_terms(g.n, {e: 1 for e in g.edges})


def format_polynomial(p: SmoothPolynomial) -> str:
    """Debug dump: ``p poly n`` header, ``c <value>``, then ``coeff i1 .. il`` (1-indexed)."""
    lines = [f"p poly {p.n}", f"c {p.constant}"]
    for m in p.monomials:
        lines.append(" ".join([str(m.coeff)] + [str(i + 1) for i in m.vars]))
    return "\n".join(lines) + "\n"


def parse_polynomial(text: str) -> SmoothPolynomial:
    n = None
    constant: Coeff = 0
    terms: dict[tuple[int, ...], Coeff] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "p":
                if len(parts) != 3 or parts[1] != "poly":
                    raise InputError(f"line {lineno}: malformed header {line!r}")
                n = int(parts[2])
            elif parts[0] == "c":
                constant = exact(Fraction(parts[1]))
            else:
                if n is None:
                    raise InputError(f"line {lineno}: monomial before 'p poly n' header")
                coeff = exact(Fraction(parts[0]))
                vs = tuple(sorted(int(t) - 1 for t in parts[1:]))
                if len(set(vs)) != len(vs) or any(not 0 <= v < n for v in vs):
                    raise InputError(f"line {lineno}: bad variable list {parts[1:]}")
                if vs in terms:
                    raise InputError(f"line {lineno}: duplicate monomial")
                terms[vs] = coeff
        except (ValueError, IndexError, ZeroDivisionError):
            raise InputError(f"line {lineno}: cannot parse {line!r}") from None
    if n is None:
        raise InputError("missing 'p poly n' header")
    if () in terms:
        constant += terms.pop(())
    terms[()] = constant
    return SmoothPolynomial.from_terms(n, terms)
