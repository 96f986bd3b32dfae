"""Linear programs built from an estimation tree, and their box relaxation.

Each row constrains an affine expression ``offset + sum_j coeff_j y_j`` to
``[lower, upper]``; ``wide_lower``/``wide_upper`` are the looser bounds a
randomly rounded solution is expected to meet and feed the deviation check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .estimator import EstimationTree
from .poly import DecompositionTree
from .simplex import simplex_max, simplex_two_stage

MAXCUT = "maxcut"
GENERIC = "generic"
KDENSE = "kdense"
VARIANTS = (MAXCUT, GENERIC, KDENSE)


@dataclass(frozen=True)
class Row:
    """``lower <= offset + coeffs . y <= upper``.

    The bounds are ``center -+ radius`` clipped to ``[floor, ceil]``; keeping
    the parts lets :func:`min_widening` rescale the radius.
    """

    coeffs: tuple[tuple[int, float], ...]
    lower: float
    upper: float
    wide_lower: float
    wide_upper: float
    offset: float = 0.0
    label: str = ""
    center: float = 0.0
    radius: float = 0.0
    floor: float = -math.inf
    ceil: float = math.inf

    def value(self, y) -> float:
        return self.offset + sum(c * y[j] for j, c in self.coeffs)


@dataclass(frozen=True)
class RelaxProgram:
    """``max constant + objective . y`` over ``y`` in ``[0,1]^n`` subject to ``rows``."""

    n: int
    constant: float
    objective: np.ndarray
    rows: tuple[Row, ...]
    variant: str = GENERIC

    def objective_value(self, y) -> float:
        return self.constant + float(np.dot(self.objective, np.asarray(y, dtype=float)))

    def violations(self, y, wide: bool = False) -> np.ndarray:
        """Per-row amount by which ``y`` exits the (wide) bounds; 0 when satisfied."""
        out = np.zeros(len(self.rows))
        for i, row in enumerate(self.rows):
            v = row.value(y)
            lo, hi = (row.wide_lower, row.wide_upper) if wide else (row.lower, row.upper)
            out[i] = max(lo - v, v - hi, 0.0)
        return out

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Rows as ``(A, lower, upper, offset)`` arrays."""
        A = np.zeros((len(self.rows), self.n))
        lo = np.empty(len(self.rows))
        hi = np.empty(len(self.rows))
        off = np.empty(len(self.rows))
        for i, row in enumerate(self.rows):
            for j, c in row.coeffs:
                A[i, j] += c
            lo[i], hi[i], off[i] = row.lower, row.upper, row.offset
        return A, lo, hi, off


@dataclass(frozen=True)
class FractionalSolution:
    y: np.ndarray
    objective_value: float
    status: str  # "optimal" or "infeasible"
    iterations: int = field(default=0, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _vertex_rows(tree: DecompositionTree, est: EstimationTree, radius: float,
                 wide, eps1: float) -> list[Row]:
    rows = []
    for j in tree.root.children:
        nd = tree.nodes[(j,)]
        deg = len(nd.children)
        if not deg:
            continue
        rho_hat = est.neighbor_estimate(j)
        rad = eps1 * rho_hat + radius
        lo = max(rho_hat - rad, 0.0)
        hi = min(rho_hat + rad, float(deg))
        wlo, whi = wide(rho_hat, deg)
        rows.append(Row(tuple((i, 1.0) for i in nd.children), lo, hi, wlo, whi,
                        label=f"vertex {j}", center=rho_hat, radius=rad,
                        floor=0.0, ceil=float(deg)))
    return rows


def build_program(tree: DecompositionTree, est: EstimationTree, eps1: float, eps2: float,
                  delta: float, variant: str = GENERIC, k: int | None = None) -> RelaxProgram:
    """Assemble the relaxation for one set of estimations.

    ``maxcut``: one row per vertex on its neighbour count, bounds
    ``(1 +- eps1) rho_j +- eps2 * avg_degree`` clipped to ``[0, deg(j)]``.
    ``generic``: one row per internal tree node at level ``l``,
    ``c + sum_j y_j rho_child`` within ``rho +- eps1 rho_bar +- eps2 n^(l-1+delta)``.
    ``kdense``: vertex rows with radius ``eps2 n^(delta/3)`` plus the
    cardinality row ``sum_j y_j = k``.
    """
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}")
    if eps1 <= 0 or eps2 <= 0:
        raise InputError("eps1 and eps2 must be positive")
    if est.tree is not tree:
        raise InputError("estimation tree does not belong to this decomposition")
    n = tree.n
    objective = np.zeros(n)
    for j in tree.root.children:
        objective[j] = est.rho((j,))
    constant = float(tree.root.constant)
    log_n = math.log(n) if n > 1 else 0.0

    if variant == MAXCUT:
        if tree.d != 2:
            raise InputError("maxcut variant needs a degree-2 tree")
        avg_deg = sum(len(tree.nodes[(j,)].children) for j in tree.root.children) / n
        radius = eps2 * avg_deg

        def wide(rho, deg):
            w = 2 * math.sqrt(deg * log_n)
            return (1 - eps1) * rho - radius - w, (1 + eps1) * rho + radius + w

        rows = _vertex_rows(tree, est, radius, wide, eps1)
    elif variant == KDENSE:
        if tree.d != 2:
            raise InputError("kdense variant needs a degree-2 tree")
        if k is None or not 1 <= k <= n:
            raise InputError(f"kdense needs 1 <= k <= n, got {k}")
        radius = eps2 * n ** (delta / 3)

        def wide(rho, deg):
            return (1 - eps1) ** 2 * rho - 2 * radius, (1 + eps1) ** 2 * rho + 2 * radius

        rows = _vertex_rows(tree, est, radius, wide, eps1)
        w = 2 * math.sqrt(n * log_n)
        rows.append(Row(tuple((j, 1.0) for j in range(n)), float(k), float(k),
                        k - w, k + w, label="cardinality", center=float(k)))
    else:
        rows = []
        for nd in sorted(tree.internal_nodes(), key=lambda nd: (-nd.level, nd.key)):
            e = est.nodes[nd.key]
            coeffs = tuple((j, est.rho(nd.key + (j,))) for j in nd.children)
            coeffs = tuple((j, c) for j, c in coeffs if c != 0.0)
            slack = eps2 * n ** (nd.level - 1 + delta)
            r = eps1 * e.rho_bar + slack
            rows.append(Row(coeffs, e.rho - r, e.rho + r,
                            e.rho - 2 * eps1 * e.rho_bar - 2 * slack,
                            e.rho + 2 * eps1 * e.rho_bar + 2 * slack,
                            offset=float(nd.constant), label=f"node {nd.key}",
                            center=e.rho, radius=r))
    return RelaxProgram(n, constant, objective, tuple(rows), variant)


def _reach(row: Row) -> tuple[float, float]:
    """Range of the row expression over the unit box."""
    neg = sum(c for _, c in row.coeffs if c < 0)
    pos = sum(c for _, c in row.coeffs if c > 0)
    return row.offset + neg, row.offset + pos


def solve(program: RelaxProgram, tol: float = 1e-7) -> FractionalSolution:
    """Optimal point of the box relaxation, or ``infeasible`` status."""
    if tol <= 0:
        raise InputError("tolerance must be positive")
    n = program.n
    A, lo, hi, off = program.dense()
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for row, a, l, h, o in zip(program.rows, A, lo, hi, off):
        if l > h + tol:
            return FractionalSolution(np.full(n, np.nan), float("nan"), "infeasible")
        if abs(h - l) <= tol:
            eq_rows.append(a)
            eq_rhs.append((l + h) / 2 - o)
            continue
        # sides the unit box already enforces are left out
        lo_reach, hi_reach = _reach(row)
        if h < hi_reach:
            ub_rows.append(a)
            ub_rhs.append(h - o)
        if l > lo_reach:
            ub_rows.append(-a)
            ub_rhs.append(o - l)
    res = simplex_max(program.objective, np.array(ub_rows).reshape(-1, n), np.array(ub_rhs),
                      np.array(eq_rows).reshape(-1, n), np.array(eq_rhs), tol=tol,
                      upper=np.ones(n))
    if res.status != "optimal":
        return FractionalSolution(res.x, float("nan"), "infeasible", res.iterations)
    y = np.clip(res.x, 0.0, 1.0)
    return FractionalSolution(y, program.objective_value(y), "optimal", res.iterations)


def _widening_lp(program: RelaxProgram):
    """Constraints over ``(y, f)`` where ``f`` scales every row radius."""
    n = program.n
    A, _, _, off = program.dense()
    rows = program.rows
    center = np.array([r.center for r in rows]) - off
    radius = np.array([r.radius for r in rows])
    floor = np.array([r.floor for r in rows])
    ceil = np.array([r.ceil for r in rows])
    lo_reach = off + np.minimum(A, 0.0).sum(axis=1)
    hi_reach = off + np.maximum(A, 0.0).sum(axis=1)
    eq = radius == 0
    free = ~eq
    lo_cut = free & (floor > lo_reach)
    hi_cut = free & (ceil < hi_reach)

    def block(M, f_coef):
        return np.column_stack([M, f_coef])

    A_ub = np.vstack([block(A[free], -radius[free]), block(-A[free], -radius[free]),
                      block(-A[lo_cut], np.zeros(lo_cut.sum())),
                      block(A[hi_cut], np.zeros(hi_cut.sum()))]).reshape(-1, n + 1)
    b_ub = np.concatenate([center[free], -center[free], off[lo_cut] - floor[lo_cut],
                           ceil[hi_cut] - off[hi_cut]])
    A_eq = block(A[eq], np.zeros(eq.sum())).reshape(-1, n + 1)
    return A_ub, b_ub, A_eq, center[eq]


def min_widening(program: RelaxProgram, tol: float = 1e-7) -> float:
    """Smallest factor ``f >= 0`` such that scaling every row radius by ``f`` admits a point.

    Returns ``inf`` when no factor works (clipping or equality rows conflict).
    """
    n = program.n
    c = np.zeros(n + 1)
    c[n] = -1.0
    res = simplex_max(c, *_widening_lp(program), tol=tol, upper=np.r_[np.ones(n), np.inf])
    if res.status != "optimal":
        return math.inf
    return max(0.0, float(res.x[n]))


def power_of_two_factor(f: float) -> float:
    """1 when ``f <= 1``, else the smallest power of two at least ``f``."""
    if f <= 1 + 1e-9:
        return 1.0
    return 2.0 ** math.ceil(math.log2(f) - 1e-9)


def solve_widened(program: RelaxProgram, tol: float = 1e-7) -> tuple[float, FractionalSolution]:
    """Optimum over the program with radii scaled by ``power_of_two_factor(min_widening)``.

    Both stages share one tableau: the first finds the minimal factor, the
    second caps it at the rounded-up power of two and maximizes the
    objective. The returned factor is ``inf`` when no widening admits a point.
    """
    if tol <= 0:
        raise InputError("tolerance must be positive")
    n = program.n
    c1 = np.zeros(n + 1)
    c1[n] = -1.0
    c2 = np.r_[program.objective, 0.0]
    chosen = [1.0]

    def cap(x):
        chosen[0] = power_of_two_factor(max(0.0, float(x[n])))
        return np.r_[np.ones(n), max(chosen[0], float(x[n]))]

    first, second = simplex_two_stage(c1, c2, cap, *_widening_lp(program), tol=tol,
                                      upper=np.r_[np.ones(n), np.inf], start_col=n)
    if second is None:
        return math.inf, FractionalSolution(np.full(n, np.nan), float("nan"), "infeasible")
    y = np.clip(second.x[:n], 0.0, 1.0)
    return chosen[0], FractionalSolution(y, program.objective_value(y), "optimal", second.iterations)


def format_program(program: RelaxProgram) -> str:
    """Plain-text dump for debugging; not a stable interface."""
    def expr(pairs):
        return " ".join(f"{c:+.6g} y{j}" for j, c in pairs) or "0"

    lines = [f"max {program.constant:+.6g} " + expr(enumerate(program.objective)), "subject to"]
    for row in program.rows:
        lines.append(f"  {row.label}: {row.lower:.6g} <= {row.offset:+.6g} {expr(row.coeffs)} <= {row.upper:.6g}")
    lines.append(f"  0 <= y_j <= 1 for j in 0..{program.n - 1}")
    return "\n".join(lines) + "\n"
