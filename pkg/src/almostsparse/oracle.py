"""Exact brute-force optimizers and Monte-Carlo checks of the concentration bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, InputError
from .graph import Graph
from .poly import SmoothPolynomial, exact, from_graph_kdense
from .relaxation import RelaxProgram

MAX_ENUM_N = 26
KDENSE_BUDGET = 5_000_000
_LOW_BITS = 20


def _zeta(a: np.ndarray, bits: int) -> None:
    """In-place subset-sum transform over the low ``bits`` bits."""
    for b in range(bits):
        view = a.reshape(-1, 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]


def all_values(p: SmoothPolynomial) -> tuple[np.ndarray, int]:
    """``p`` at every binary point as scaled integers, for ``n <= 20``.

    Index ``i`` of the result encodes ``x`` with ``x_0`` as the most
    significant bit. Values are ``p(x) * scale``.
    """
    if p.n > _LOW_BITS:
        raise InputError("all_values is limited to n <= 20; use brute_force_max")
    return _enumerate(p, keep_all=True)


def _integer_terms(p: SmoothPolynomial):
    coeffs = [p.constant] + [m.coeff for m in p.monomials]
    scale = 1
    for c in coeffs:
        if isinstance(c, Fraction):
            scale = math.lcm(scale, c.denominator)
    ints = [int(c * scale) for c in coeffs]
    if sum(abs(c) for c in ints) >= 2**62:
        raise InputError("polynomial coefficients too large for exact enumeration")
    n = p.n
    masks = [sum(1 << (n - 1 - v) for v in m.vars) for m in p.monomials]
    return ints[0], np.array(masks, dtype=np.int64), np.array(ints[1:], dtype=np.int64), scale


def _enumerate(p: SmoothPolynomial, keep_all: bool = False):
    n = p.n
    const, masks, coefs, scale = _integer_terms(p)
    low = min(n, _LOW_BITS)
    high = n - low
    low_mask = (1 << low) - 1
    lows = masks & low_mask
    highs = masks >> low
    best_val = None
    best_idx = -1
    for prefix in range(1 << high):
        sel = (highs & ~prefix) == 0
        a = np.zeros(1 << low, dtype=np.int64)
        np.add.at(a, lows[sel], coefs[sel])
        _zeta(a, low)
        a += const
        if keep_all:
            return a, scale
        i = int(np.argmax(a))
        if best_val is None or a[i] > best_val:
            best_val, best_idx = int(a[i]), (prefix << low) | i
    return best_idx, best_val, scale


def brute_force_max(p: SmoothPolynomial) -> tuple[tuple[int, ...], int | Fraction]:
    """Exact maximizer over ``{0,1}^n``; the lexicographically smallest among ties."""
    if p.n > MAX_ENUM_N:
        raise ConfigurationError(f"refusing to enumerate 2^{p.n} points (limit n <= {MAX_ENUM_N})")
    if p.n == 0:
        return (), p.constant
    idx, val, scale = _enumerate(p)
    x = tuple((idx >> (p.n - 1 - i)) & 1 for i in range(p.n))
    return x, exact(Fraction(val, scale))


def kdense_argmax(g: Graph, k: int) -> tuple[tuple[int, ...], int]:
    """Best ``k``-subset (as an indicator vector) and its induced edge count."""
    if not 0 <= k <= g.n:
        raise InputError(f"k must lie in 0..{g.n}, got {k}")
    if math.comb(g.n, k) > KDENSE_BUDGET:
        raise ConfigurationError(f"C({g.n},{k}) exceeds the enumeration budget {KDENSE_BUDGET}")
    if g.n <= MAX_ENUM_N and g.n <= _LOW_BITS:
        values, _ = _enumerate(from_graph_kdense(g), keep_all=True)
        idx = np.arange(1 << g.n, dtype=np.int64)
        pop = np.zeros_like(idx)
        for b in range(g.n):
            pop += (idx >> b) & 1
        values = np.where(pop == k, values, -1)
        i = int(np.argmax(values))
        x = tuple((i >> (g.n - 1 - v)) & 1 for v in range(g.n))
        return x, int(values[i])
    best, best_set = -1, ()
    for subset in itertools.combinations(range(g.n), k):
        s = set(subset)
        val = sum(1 for u, v in g.edges if u in s and v in s)
        if val > best:
            best, best_set = val, subset
    return tuple(int(v in best_set) for v in range(g.n)), best


def brute_force_kdense(g: Graph, k: int) -> int:
    """Maximum number of edges induced by ``k`` vertices."""
    return kdense_argmax(g, k)[1]


def lp_vertex_max(program: RelaxProgram, tol: float = 1e-9) -> tuple[str, float]:
    """Optimum of the box relaxation by enumerating basic feasible points.

    Every vertex of the polytope makes ``n`` linearly independent
    constraints tight; each tight item is a row at one of its bounds or a
    variable at 0 or 1. Returns ``("infeasible", nan)`` when no vertex exists.
    """
    n = program.n
    A, lo, hi, off = program.dense()
    m = A.shape[0]
    items = np.vstack([A, np.eye(n)])
    lows = np.concatenate([lo - off, np.zeros(n)])
    highs = np.concatenate([hi - off, np.ones(n)])
    sides = np.array(list(itertools.product((0, 1), repeat=n)), dtype=bool)  # (2^n, n)
    lo_tol = lo - tol * (1 + np.abs(lo))
    hi_tol = hi + tol * (1 + np.abs(hi))
    best = -np.inf
    combos = itertools.combinations(range(m + n), n)
    while True:
        chunk = np.array(list(itertools.islice(combos, 512)), dtype=np.int64).reshape(-1, n)
        if not len(chunk):
            break
        M = items[chunk]  # (B, n, n)
        keep = np.abs(np.linalg.det(M)) > 1e-10
        if not keep.any():
            continue
        M, S = M[keep], chunk[keep]
        rhs = np.where(sides[None], highs[S][:, None, :], lows[S][:, None, :])  # (B, 2^n, n)
        X = np.linalg.solve(M, rhs.transpose(0, 2, 1)).transpose(0, 2, 1)
        ok = (X >= -tol).all(-1) & (X <= 1 + tol).all(-1)
        if m:
            V = X @ A.T + off
            ok &= (V >= lo_tol).all(-1) & (V <= hi_tol).all(-1)
        if ok.any():
            best = max(best, float((X[ok] @ program.objective).max()))
    if best == -np.inf:
        return "infeasible", float("nan")
    return "optimal", program.constant + best


@dataclass(frozen=True)
class LemmaCheckParams:
    n: int = 100
    q: int = 0
    beta: float = 1.0
    delta: float = 0.5
    alpha1: float = 0.5
    alpha2: float = 0.5
    trials: int = 10_000
    seed: int = 0
    d: int | None = None  # defaults to q + 2
    gamma_scale: float = 1.0
    r: int | None = None  # fixed sample size, overriding the formula
    full_cover: bool = False  # sample every index exactly once instead

    def __post_init__(self):
        if self.n < 2 or self.q < 0 or self.trials < 1:
            raise InputError("need n >= 2, q >= 0 and trials >= 1")
        if min(self.beta, self.alpha1, self.alpha2, self.gamma_scale) <= 0 or self.beta < 1:
            raise InputError("beta >= 1 and alpha1, alpha2, gamma_scale > 0 required")
        if not 0 < self.delta <= 1:
            raise InputError("delta must lie in (0, 1]")

    @property
    def degree(self) -> int:
        return self.q + 2 if self.d is None else self.d

    def sample_size(self) -> int:
        if self.full_cover:
            return self.n
        if self.r is not None:
            return self.r
        gamma = self.gamma_scale * 3 * (self.degree + 1) * (self.q + 1) * self.beta / (
            self.alpha1**2 * self.alpha2)
        return max(1, math.ceil(gamma * self.n ** (1 - self.delta) * math.log(self.n)))


@dataclass(frozen=True)
class LemmaCheckResult:
    violation_count: int
    trials: int
    theoretical_budget: float
    r: int = 0

    @property
    def empirical_rate(self) -> float:
        return self.violation_count / self.trials

    def to_dict(self) -> dict:
        return {"violation_count": self.violation_count, "trials": self.trials,
                "empirical_rate": self.empirical_rate,
                "theoretical_budget": self.theoretical_budget, "r": self.r}


def _coefficients(params: LemmaCheckParams, rng: np.random.Generator, size) -> np.ndarray:
    bound = (params.q + 1) * params.beta * params.n ** params.q
    return rng.uniform(-bound, bound, size=size)


_CHUNK = 256


def check_sampling_lemma(params: LemmaCheckParams, rho: np.ndarray | None = None) -> LemmaCheckResult:
    """Violation rate of the sampled-sum concentration bound.

    Each trial draws a binary ``x``, coefficients ``|rho_j| <= (q+1) beta n^q``
    (or uses the fixed ``rho``), and ``r`` indices with replacement, then
    checks ``|(n/r) sum_R rho_j x_j - sum_j rho_j x_j| <= alpha1 sum_j |rho_j|
    + 2 alpha2 n^(q+delta)``.
    """
    n, r = params.n, params.sample_size()
    rng = np.random.default_rng(params.seed)
    radius_const = 2 * params.alpha2 * n ** (params.q + params.delta)
    violations = 0
    for start in range(0, params.trials, _CHUNK):
        t = min(_CHUNK, params.trials - start)
        x = rng.integers(0, 2, size=(t, n))
        coef = np.broadcast_to(rho, (t, n)) if rho is not None else _coefficients(params, rng, (t, n))
        if params.full_cover:
            R = np.tile(np.arange(n), (t, 1))
        else:
            R = rng.integers(0, n, size=(t, r))
        rx = coef * x
        est = (n / r) * np.take_along_axis(rx, R, axis=1).sum(1)
        exact_sum = rx.sum(1)
        radius = params.alpha1 * np.abs(coef).sum(1) + radius_const
        violations += int((np.abs(est - exact_sum) > radius * (1 + 1e-12)).sum())
    return LemmaCheckResult(violations, params.trials, 4 / n ** (params.degree + 1), r)


def check_rounding_lemma(params: LemmaCheckParams, y: np.ndarray | None = None,
                         rho: np.ndarray | None = None) -> LemmaCheckResult:
    """Violation rate of the rounding concentration bound.

    Each trial draws a fractional ``y`` (or uses the fixed one), coefficients
    as above, rounds ``z_j ~ Bernoulli(y_j)`` and checks ``|sum rho_j z_j -
    sum rho_j y_j| <= alpha sum |rho_j| + 2 alpha n^(q+delta)`` with
    ``alpha = alpha1``.
    """
    n = params.n
    alpha = params.alpha1
    rng = np.random.default_rng(params.seed)
    radius_const = 2 * alpha * n ** (params.q + params.delta)
    violations = 0
    for start in range(0, params.trials, _CHUNK):
        t = min(_CHUNK, params.trials - start)
        yy = np.broadcast_to(y, (t, n)) if y is not None else rng.random((t, n))
        coef = np.broadcast_to(rho, (t, n)) if rho is not None else _coefficients(params, rng, (t, n))
        z = rng.random((t, n)) < yy
        diff = (coef * z).sum(1) - (coef * yy).sum(1)
        radius = alpha * np.abs(coef).sum(1) + radius_const
        violations += int((np.abs(diff) > radius * (1 + 1e-12)).sum())
    return LemmaCheckResult(violations, params.trials, 4 / n ** (params.degree + 1), 0)
