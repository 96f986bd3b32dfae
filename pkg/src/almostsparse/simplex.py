"""Dense-tableau two-phase primal simplex with bounded variables.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  0 <= x <= upper``.
Upper bounds are handled by bound flips rather than extra rows. Pivoting
uses Dantzig's rule and falls back to Bland's rule after a run of
degenerate steps, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50


@dataclass
class LPResult:
    status: str  # "optimal" or "infeasible"
    x: np.ndarray
    objective: float
    iterations: int = 0


class _Tableau:
    """``T[:m]`` holds ``B^-1 A``, ``T[m]`` the reduced costs; ``xb`` the basic values."""

    def __init__(self, T: np.ndarray, basis: list[int], xb: np.ndarray,
                 upper: np.ndarray, max_iter: int):
        self.T = T
        self.basis = basis
        self.xb = xb
        self.upper = upper
        self.at_upper = np.zeros(T.shape[1], dtype=bool)
        self.max_iter = max_iter
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        prow = T[row] / T[row, col]
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= colv[:, None] * prow
        T[row] = prow
        self.basis[row] = col

    def value_of(self, col: int) -> float:
        return float(self.upper[col]) if self.at_upper[col] else 0.0

    def run(self, allowed: np.ndarray) -> None:
        """Minimize the objective row over columns flagged in ``allowed``."""
        T = self.T
        m = T.shape[0] - 1
        upper = self.upper
        ub = upper[self.basis]
        # sign flips the reduced cost so that a positive score is improving
        sign = np.where(self.at_upper, 1.0, -1.0) * allowed
        bland = False
        degenerate = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            while True:
                if self.iterations >= self.max_iter:
                    raise SolverError(f"simplex exceeded {self.max_iter} steps (cycling guard)")
                score = T[m] * sign
                if bland:
                    cand = np.flatnonzero(score > PIVOT_TOL)
                    if cand.size == 0:
                        return
                    col = int(cand[0])
                else:
                    col = int(np.argmax(score))
                    if score[col] <= PIVOT_TOL:
                        return
                direction = -1.0 if self.at_upper[col] else 1.0
                alpha = T[:m, col] * direction  # basic values move by -alpha * theta
                xb = self.xb
                theta = upper[col]
                row = -1
                to_upper = False
                if m:
                    dec = np.where(alpha > PIVOT_TOL, np.maximum(xb, 0.0) / alpha, np.inf)
                    inc = np.where(alpha < -PIVOT_TOL, np.maximum(ub - xb, 0.0) / -alpha, np.inf)
                    i = int(np.argmin(dec))
                    j = int(np.argmin(inc))
                    if dec[i] < theta:
                        theta, row = float(dec[i]), i
                    if inc[j] < theta:
                        theta, row, to_upper = float(inc[j]), j, True
                    if bland and row >= 0:
                        # among tied rows, the smallest basic index leaves
                        tied = np.flatnonzero(np.minimum(dec, inc) <= theta + PIVOT_TOL)
                        row = int(tied[np.argmin(np.asarray(self.basis)[tied])])
                        to_upper = bool(inc[row] < dec[row])
                if not theta < np.inf:
                    raise SolverError("LP is unbounded")
                if theta <= PIVOT_TOL:
                    degenerate += 1
                    if degenerate >= DEGENERATE_RUN:
                        bland = True
                else:
                    degenerate = 0
                if theta:
                    xb -= alpha * theta
                self.iterations += 1
                if row < 0:
                    # entering variable just moves to its opposite bound
                    self.at_upper[col] = not self.at_upper[col]
                    sign[col] = -sign[col]
                    continue
                entering_value = self.value_of(col) + direction * theta
                leaving = self.basis[row]
                self.at_upper[leaving] = to_upper
                if allowed[leaving]:
                    sign[leaving] = 1.0 if to_upper else -1.0
                self.at_upper[col] = False
                sign[col] = 0.0 if not allowed[col] else -1.0
                self.pivot(row, col)
                xb[row] = entering_value
                ub[row] = upper[col]


def _slack_start(A_ub, b_ub, ux, col, max_iter):
    """Feasible basis from one pivot on ``col``, or ``None`` if it does not exist.

    Every other variable sits at 0 and ``col`` rises just far enough that
    every slack is nonnegative.
    """
    g = A_ub[:, col]
    neg = g < 0
    if not neg.any() or (b_ub[~neg] < 0).any():
        return None
    need = b_ub[neg] / g[neg]
    t = float(need.max())
    if t < 0 or t > ux[col]:
        return None
    pos = g > 0
    if (b_ub[pos] - g[pos] * t < 0).any():
        return None
    row = int(np.flatnonzero(neg)[np.argmax(need)])
    m, n = A_ub.shape
    T = np.zeros((m + 1, n + m))
    T[:m, :n] = A_ub
    T[:m, n:] = np.eye(m)
    upper = np.concatenate([ux, np.full(m, np.inf)])
    tab = _Tableau(T, list(range(n, n + m)), np.maximum(b_ub - g * t, 0.0), upper, max_iter)
    tab.pivot(row, col)
    tab.xb[row] = t
    return tab, np.zeros(n + m, dtype=bool)


def _setup(c, A_ub, b_ub, A_eq, b_eq, tol, max_iter, upper, start_col=None):
    """Phase 1. Returns ``(tableau, is_art)``, or ``None`` when infeasible."""
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    ux = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if ux.shape != (n,) or (ux < 0).any():
        raise ValueError("upper bounds must be a nonnegative vector of length n")
    if max_iter is None:
        max_iter = 50 * (2 * len(b_ub) + len(b_eq) + n) + 1000
    if start_col is not None and not len(b_eq) and len(b_ub):
        started = _slack_start(A_ub, b_ub, ux, start_col, max_iter)
        if started is not None:
            return started

    # each row: (coefficients, rhs, kind) with rhs >= 0 and kind in {"<=", ">=", "="}
    rows = []
    for a, b in zip(A_ub, b_ub):
        rows.append((a, b, "<=") if b >= 0 else (-a, -b, ">="))
    for a, b in zip(A_eq, b_eq):
        rows.append((a, b, "=") if b >= 0 else (-a, -b, "="))
    m = len(rows)
    n_slack = sum(1 for r in rows if r[2] != "=")
    n_art = sum(1 for r in rows if r[2] != "<=")
    ncols = n + n_slack + n_art
    T = np.zeros((m + 1, ncols))
    xb = np.zeros(m)
    basis = []
    s_idx, a_idx = n, n + n_slack
    art_rows = []
    for i, (a, b, kind) in enumerate(rows):
        T[i, :n] = a
        xb[i] = b
        if kind == "<=":
            T[i, s_idx] = 1.0
            basis.append(s_idx)
            s_idx += 1
        else:
            if kind == ">=":
                T[i, s_idx] = -1.0
                s_idx += 1
            T[i, a_idx] = 1.0
            basis.append(a_idx)
            art_rows.append(i)
            a_idx += 1

    upper = np.concatenate([ux, np.full(ncols - n, np.inf)])
    tab = _Tableau(T, basis, xb, upper, max_iter)
    is_art = np.zeros(ncols, dtype=bool)
    is_art[n + n_slack:] = True
    scale = max(1.0, float(np.abs(xb).max(initial=0.0)))

    if art_rows:
        T[m, :] = 0.0
        T[m, is_art] = 1.0
        for i in art_rows:
            T[m] -= T[i]
        tab.run(np.ones(ncols, dtype=bool))
        residual = sum(tab.xb[i] for i, b in enumerate(tab.basis) if is_art[b])
        if residual > tol * scale:
            return None
        # drive remaining artificials out of the basis, dropping redundant rows
        i = 0
        while i < T.shape[0] - 1:
            if is_art[tab.basis[i]]:
                cand = np.flatnonzero((np.abs(T[i]) > 1e-7) & ~is_art)
                if cand.size:
                    col = int(cand[0])
                    value = tab.value_of(col)
                    tab.pivot(i, col)
                    tab.at_upper[col] = False
                    tab.xb[i] = value
                else:
                    T = np.delete(T, i, axis=0)
                    tab.T = T
                    tab.xb = np.delete(tab.xb, i)
                    del tab.basis[i]
                    continue
            i += 1
    return tab, is_art


def _optimize(tab: _Tableau, is_art: np.ndarray, c: np.ndarray) -> LPResult:
    T = tab.T
    m = T.shape[0] - 1
    n = c.size
    cost = np.zeros(T.shape[1])
    cost[:n] = -c
    cb = cost[tab.basis]
    T[m] = cost - cb @ T[:m]
    tab.run(~is_art)
    x = _point(tab)[:n]
    return LPResult("optimal", x, float(c @ x), tab.iterations)


def _point(tab: _Tableau) -> np.ndarray:
    x = np.where(tab.at_upper, tab.upper, 0.0)
    x[~np.isfinite(x)] = 0.0
    for i, bcol in enumerate(tab.basis):
        x[bcol] = tab.xb[i]
    return x


def simplex_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                tol: float = 1e-7, max_iter: int | None = None, upper=None) -> LPResult:
    c = np.asarray(c, dtype=float)
    setup = _setup(c, A_ub, b_ub, A_eq, b_eq, tol, max_iter, upper)
    if setup is None:
        return LPResult("infeasible", np.full(c.size, np.nan), float("nan"))
    return _optimize(*setup, c)


def simplex_two_stage(c1, c2, cap, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                      tol: float = 1e-7, max_iter: int | None = None, upper=None,
                      start_col: int | None = None) -> tuple[LPResult, LPResult | None]:
    """Maximize ``c1``, tighten upper bounds, then maximize ``c2`` from the same basis.

    ``cap(x1)`` receives the first optimum and returns new upper bounds for
    the structural variables; each must be at least the value in ``x1`` so
    the basis stays feasible. ``start_col`` names a variable that can
    absorb every negative right-hand side on its own; when it qualifies,
    phase 1 is replaced by a single pivot.
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    setup = _setup(c1, A_ub, b_ub, A_eq, b_eq, tol, max_iter, upper, start_col)
    if setup is None:
        nan = np.full(c1.size, np.nan)
        return LPResult("infeasible", nan, float("nan")), None
    tab, is_art = setup
    first = _optimize(tab, is_art, c1)
    new_upper = np.asarray(cap(first.x), dtype=float)
    n = c1.size
    if (new_upper < first.x - 1e-9).any():
        raise ValueError("tightened bounds must keep the first optimum feasible")
    # nonbasic variables resting on a moved upper bound would break the basis
    if (tab.at_upper[:n] & (new_upper != tab.upper[:n])).any():
        raise ValueError("cannot move the upper bound of a variable resting on it")
    tab.upper = tab.upper.copy()
    tab.upper[:n] = new_upper
    return first, _optimize(tab, is_art, c2)
