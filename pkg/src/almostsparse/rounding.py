"""Randomized rounding of fractional optima and the rounded-solution deviation check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .estimator import EstimationTree
from .poly import DecompositionTree
from .relaxation import FractionalSolution, RelaxProgram, build_program

INTEGRAL_TOL = 1e-9


@dataclass(frozen=True)
class DeviationReport:
    """Slack of every row against its widened bounds (negative slack = violation)."""

    slacks: tuple[float, ...]
    labels: tuple[str, ...]

    @property
    def worst(self) -> float:
        return min(self.slacks, default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst >= -1e-9

    @property
    def violated(self) -> list[str]:
        return [lab for lab, s in zip(self.labels, self.slacks) if s < -1e-9]


def _wide_arrays(program: RelaxProgram):
    A, _, _, off = program.dense()
    wlo = np.array([r.wide_lower for r in program.rows])
    whi = np.array([r.wide_upper for r in program.rows])
    return A, off, wlo, whi


def _total_violation(V: np.ndarray, wlo: np.ndarray, whi: np.ndarray) -> np.ndarray:
    return (np.maximum(wlo - V, 0.0) + np.maximum(V - whi, 0.0)).sum(axis=-1)


def check_program_deviation(z, program: RelaxProgram) -> DeviationReport:
    """Evaluate every row of ``program`` at ``z`` against the widened bounds."""
    z = np.asarray(z, dtype=float)
    slacks = []
    for row in program.rows:
        v = row.value(z)
        slacks.append(float(min(v - row.wide_lower, row.wide_upper - v)))
    return DeviationReport(tuple(slacks), tuple(r.label for r in program.rows))


def check_deviation(z, est: EstimationTree, tree: DecompositionTree, eps1: float, eps2: float,
                    variant: str, delta: float = 1.0, k: int | None = None) -> DeviationReport:
    """Rebuild the rows for ``est`` and check ``z`` against their widened bounds."""
    program = build_program(tree, est, eps1, eps2, delta, variant, k=k)
    return check_program_deviation(z, program)


def round_solution(sol: FractionalSolution, program: RelaxProgram, trials: int = 32,
                   rng: np.random.Generator | None = None,
                   score: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Turn a fractional optimum into a binary vector.

    Draws ``trials`` independent roundings (bit ``j`` is 1 with probability
    ``y_j``) and keeps the best one: first any that meets every widened
    bound, then the highest objective, then the lexicographically smallest.
    Each strictly fractional coordinate is then pushed toward the sign of its
    objective weight (ties to 0) whenever that does not increase the total
    widened-bound violation. If the result still loses more than 1 against
    the fractional objective, the fractional coordinates are set by sign
    alone, which can only gain.

    With ``score`` (a batch objective, higher is better) the returned vector
    is the best-scoring one among that result and every random trial whose
    program objective is within 1 of the fractional objective; ties go to
    the lexicographically smallest.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    y = np.clip(np.asarray(sol.y, dtype=float), 0.0, 1.0)
    frac = np.flatnonzero((y > INTEGRAL_TOL) & (y < 1 - INTEGRAL_TOL))
    base = (y >= 1 - INTEGRAL_TOL).astype(np.int8)
    if frac.size == 0:
        return base
    if rng is None:
        rng = np.random.default_rng(0)
    w = program.objective
    A, off, wlo, whi = _wide_arrays(program)

    Z = np.tile(base, (trials, 1))
    Z[:, frac] = (rng.random((trials, frac.size)) < y[frac]).astype(np.int8)
    viol = _total_violation(Z @ A.T + off, wlo, whi) if len(program.rows) else np.zeros(trials)
    obj = Z @ w
    order = sorted(range(trials), key=lambda t: (viol[t] > 1e-9, -obj[t], tuple(Z[t])))
    z = Z[order[0]].copy()

    current = viol[order[0]]
    for j in frac:
        target = 1 if w[j] > 0 else 0
        if z[j] == target:
            continue
        cand = z.copy()
        cand[j] = target
        v = _total_violation(A @ cand + off, wlo, whi) if len(program.rows) else 0.0
        if v <= current + 1e-9:
            z, current = cand, v

    target_obj = float(np.dot(w, y))
    if float(np.dot(w, z)) < target_obj - 1 - 1e-9:
        z = base.copy()
        z[frac] = (w[frac] > 0).astype(np.int8)
    if score is None:
        return z
    keep = obj >= target_obj - 1 - 1e-9
    cands = np.vstack([z[None, :], Z[keep]])
    vals = score(cands)
    top = np.flatnonzero(vals >= vals.max() - 1e-9)
    return min((cands[i] for i in top), key=tuple).copy()
