"""CNF formulas, truth-table CSPs, their arithmetization, and file formats.

DIMACS CNF is the usual ``p cnf n m`` header followed by 0-terminated
clauses. General constraints use a small line format::

    c optional comment
    <k> <n> <m>
    <v1> ... <vt> : <truth table in hex>

with 1-indexed variables, ``t <= k``, and truth-table bit ``r`` giving the
value on the row ``a`` with ``r = sum_i a_i 2^(t-1-i)`` (first variable most
significant).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import InputError
from .poly import COEFF_LIMIT, SmoothPolynomial


@dataclass(frozen=True)
class CnfFormula:
    """Clauses of signed 1-indexed literals (DIMACS convention)."""

    n: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        norm = []
        for c in self.clauses:
            lits = tuple(dict.fromkeys(int(l) for l in c))
            if not lits:
                raise InputError("empty clause")
            if any(l == 0 or abs(l) > self.n for l in lits):
                raise InputError(f"clause {lits} has a literal out of range 1..{self.n}")
            vs = {abs(l) for l in lits}
            if len(vs) != len(lits):
                raise InputError(f"clause {lits} contains a variable and its negation")
            norm.append(lits)
        object.__setattr__(self, "clauses", tuple(norm))

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def k(self) -> int:
        return max((len(c) for c in self.clauses), default=0)


@dataclass(frozen=True)
class Constraint:
    vars: tuple[int, ...]  # 0-indexed, distinct
    table: int  # bit r is the value on row r

    @property
    def arity(self) -> int:
        return len(self.vars)

    def holds(self, x: Sequence[int]) -> bool:
        r = 0
        for v in self.vars:
            r = (r << 1) | int(x[v])
        return bool((self.table >> r) & 1)

    def satisfying_rows(self) -> list[tuple[int, ...]]:
        t = self.arity
        return [tuple((r >> (t - 1 - i)) & 1 for i in range(t))
                for r in range(2**t) if (self.table >> r) & 1]


@dataclass(frozen=True)
class CspInstance:
    n: int
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        for c in self.constraints:
            if not c.vars or len(set(c.vars)) != len(c.vars):
                raise InputError(f"constraint variables must be distinct and nonempty: {c.vars}")
            if any(not 0 <= v < self.n for v in c.vars):
                raise InputError(f"constraint variable out of range for n={self.n}: {c.vars}")
            if not 0 < c.table < 2 ** (2**c.arity):
                raise InputError(f"constraint on {c.vars} has no satisfying row or an oversized table")

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def k(self) -> int:
        return max((c.arity for c in self.constraints), default=0)


Instance = Union[CnfFormula, CspInstance]


def clause_to_constraint(clause: Sequence[int]) -> Constraint:
    """A clause is every row except the single one falsifying all literals."""
    vs = tuple(abs(l) - 1 for l in clause)
    t = len(vs)
    false_row = 0
    for l in clause:
        false_row = (false_row << 1) | (0 if l > 0 else 1)
    return Constraint(vs, (2 ** (2**t) - 1) ^ (1 << false_row))


def to_csp(inst: Instance) -> CspInstance:
    if isinstance(inst, CspInstance):
        return inst
    return CspInstance(inst.n, tuple(clause_to_constraint(c) for c in inst.clauses))


def _multiply(poly: dict, var: int, positive: bool) -> dict:
    # multiply by x_var (positive) or 1 - x_var
    out: dict = defaultdict(int)
    for vs, c in poly.items():
        with_var = tuple(sorted(vs + (var,)))
        if positive:
            out[with_var] += c
        else:
            out[vs] += c
            out[with_var] -= c
    return out


def arithmetize(inst: Instance) -> SmoothPolynomial:
    """Polynomial counting satisfied constraints at every binary point."""
    n = inst.n
    total: dict = defaultdict(int)
    if isinstance(inst, CnfFormula):
        for clause in inst.clauses:
            # 1 - prod over literals of [literal false]
            term = {(): 1}
            for l in clause:
                term = _multiply(term, abs(l) - 1, positive=l < 0)
            total[()] += 1
            for vs, c in term.items():
                total[vs] -= c
    else:
        for con in inst.constraints:
            for row in con.satisfying_rows():
                term = {(): 1}
                for v, a in zip(con.vars, row):
                    term = _multiply(term, v, positive=bool(a))
                for vs, c in term.items():
                    total[vs] += c
    if any(abs(c) > COEFF_LIMIT for c in total.values()):
        raise InputError("arithmetized coefficient exceeds 64-bit range")
    return SmoothPolynomial.from_terms(n, total)


def count_satisfied(inst: Instance, x: Sequence[int]) -> int:
    if len(x) != inst.n:
        raise InputError(f"assignment has length {len(x)}, instance has n={inst.n}")
    if isinstance(inst, CnfFormula):
        return sum(1 for c in inst.clauses
                   if any((x[abs(l) - 1] == 1) == (l > 0) for l in c))
    return sum(1 for c in inst.constraints if c.holds(x))


def parse_dimacs_cnf(text: str) -> CnfFormula:
    n = declared = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if n is not None or len(parts) != 4 or parts[1] != "cnf":
                raise InputError(f"line {lineno}: malformed header {line!r}")
            try:
                n, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise InputError(f"line {lineno}: malformed header {line!r}") from None
            if n < 0 or declared < 0:
                raise InputError(f"line {lineno}: negative counts in header")
            continue
        if n is None:
            raise InputError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise InputError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if not current:
                    raise InputError(f"line {lineno}: empty clause")
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > n:
                raise InputError(f"line {lineno}: variable {abs(lit)} out of range 1..{n}")
            else:
                current.append(lit)
    if n is None:
        raise InputError("missing 'p cnf n m' header")
    if current:
        clauses.append(tuple(current))
    if len(clauses) != declared:
        raise InputError(f"header declares {declared} clauses, found {len(clauses)}")
    try:
        return CnfFormula(n, tuple(clauses))
    except InputError as e:
        raise InputError(f"invalid clause: {e}") from None


def format_dimacs_cnf(f: CnfFormula) -> str:
    lines = [f"p cnf {f.n} {f.m}"]
    lines += [" ".join(map(str, c)) + " 0" for c in f.clauses]
    return "\n".join(lines) + "\n"


def parse_csp(text: str) -> CspInstance:
    header = None
    constraints = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if header is None:
            try:
                k, n, m = (int(t) for t in line.split())
            except ValueError:
                raise InputError(f"line {lineno}: expected header 'k n m', got {line!r}") from None
            header = (k, n, m)
            continue
        if ":" not in line:
            raise InputError(f"line {lineno}: expected 'vars : table', got {line!r}")
        left, right = line.split(":", 1)
        try:
            vs = tuple(int(t) - 1 for t in left.split())
            table = int(right.strip(), 16)
        except ValueError:
            raise InputError(f"line {lineno}: cannot parse {line!r}") from None
        if not vs or len(vs) > header[0]:
            raise InputError(f"line {lineno}: constraint arity must be 1..{header[0]}")
        if any(not 0 <= v < header[1] for v in vs):
            raise InputError(f"line {lineno}: variable out of range 1..{header[1]}")
        try:
            constraints.append(Constraint(vs, table))
            CspInstance(header[1], (constraints[-1],))
        except InputError as e:
            raise InputError(f"line {lineno}: {e}") from None
    if header is None:
        raise InputError("missing 'k n m' header")
    if len(constraints) != header[2]:
        raise InputError(f"header declares {header[2]} constraints, found {len(constraints)}")
    return CspInstance(header[1], tuple(constraints))


def format_csp(inst: CspInstance) -> str:
    lines = [f"{inst.k} {inst.n} {inst.m}"]
    for c in inst.constraints:
        lines.append(" ".join(str(v + 1) for v in c.vars) + f" : {c.table:x}")
    return "\n".join(lines) + "\n"
