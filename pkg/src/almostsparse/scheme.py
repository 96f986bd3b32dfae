"""End-to-end pipelines: Max-Cut, smooth polynomial maximization, k-CSP and k-densest subgraph.

Every pipeline draws one variable sample, then for each assignment of the
sampled variables runs estimate -> relaxation -> solve -> round -> evaluate
and keeps the best binary vector. Assignments are independent, so they are
spread across a process pool; the merge (highest value, then lowest
assignment ordinal) does not depend on the worker count.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import oracle
from .csp import Instance, arithmetize, count_satisfied, to_csp
from .errors import InputError, SolverError
from .estimator import (
    DEFAULT_CAP,
    Sample,
    assignments,
    check_aggregate_bounds,
    draw_sample,
    estimate,
    exhaustive_assignment,
    kdense_sample_size,
    maxcut_sample_size,
    sample_size,
)
from .graph import Graph
from .poly import (
    CANONICAL_LEX,
    MAXCUT_SYMMETRIC,
    BatchEvaluator,
    Coeff,
    DecompositionTree,
    SmoothnessCertificate,
    SmoothPolynomial,
    certify,
    decompose,
    evaluate,
    from_graph_kdense,
    from_graph_maxcut,
)
from .relaxation import (
    GENERIC,
    KDENSE,
    MAXCUT,
    FractionalSolution,
    RelaxProgram,
    build_program,
    solve,
    solve_widened,
)
from .rounding import check_program_deviation, round_solution

MODES = ("exhaustive", "planted", "random")

# spawn keys for the independent random streams of one run
_SAMPLE_KEY = (0,)
_RANDOM_MODE_KEY = (1,)
_ROUND_KEY = 2


@dataclass(frozen=True)
class SchemeConfig:
    """Knobs shared by all pipelines.

    ``sample_size`` overrides the formula for ``r``; ``mode`` defaults to
    planted when a reference solution is supplied and exhaustive otherwise.
    """

    eps: float = 0.2
    delta: float = 1.0
    gamma_scale: float = 1.0
    sample_size: int | None = None
    mode: str | None = None
    random_k: int = 64
    trials: int = 32
    seed: int = 0
    lp_tol: float = 1e-7
    cap: int = DEFAULT_CAP
    oracle_compare: bool = False
    workers: int = 1
    kdense_budget: int = oracle.KDENSE_BUDGET
    max_assignments: int | None = None
    on_infeasible: str = "widen"

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise InputError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.delta <= 1:
            raise InputError(f"delta must lie in (0, 1], got {self.delta}")
        if self.gamma_scale <= 0:
            raise InputError("gamma_scale must be positive")
        if self.sample_size is not None and self.sample_size < 1:
            raise InputError("sample_size must be >= 1")
        if self.mode is not None and self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.trials < 1 or self.random_k < 1 or self.workers < 1 or self.cap < 1:
            raise InputError("trials, random_k, workers and cap must be >= 1")
        if self.lp_tol <= 0:
            raise InputError("lp_tol must be positive")
        if self.on_infeasible not in ("widen", "skip"):
            raise InputError("on_infeasible must be 'widen' or 'skip'")
        if self.max_assignments is not None and self.max_assignments < 1:
            raise InputError("max_assignments must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # results do not depend on it
        return d


@dataclass
class RunReport:
    problem: str
    n: int
    assignment: tuple[int, ...]
    value: Coeff
    fractional_objective: float | None = None
    oracle_value: Coeff | None = None
    eps1: float | None = None
    eps2: float | None = None
    mode: str | None = None
    sample_r: int | None = None
    sample_distinct: int | None = None
    counters: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float | None:
        if self.oracle_value is None:
            return None
        if self.oracle_value == 0:
            return 1.0 if self.value == 0 else float("inf")
        return float(Fraction(self.value) / Fraction(self.oracle_value))

    @property
    def gap(self) -> Coeff | None:
        if self.oracle_value is None:
            return None
        return self.oracle_value - self.value

    def to_dict(self, timings: bool = True) -> dict:
        def num(v):
            if v is None or isinstance(v, int):
                return v
            return float(v)

        d = {
            "problem": self.problem,
            "n": self.n,
            "assignment": list(self.assignment),
            "value": num(self.value),
            "value_exact": str(self.value),
            "fractional_objective": self.fractional_objective,
            "oracle_value": num(self.oracle_value),
            "ratio": self.ratio,
            "gap": num(self.gap),
            "eps1": self.eps1,
            "eps2": self.eps2,
            "mode": self.mode,
            "sample_r": self.sample_r,
            "sample_distinct": self.sample_distinct,
            "counters": dict(self.counters),
            "extra": dict(self.extra),
            "config": dict(self.config),
        }
        if timings:
            d["timings"] = dict(self.timings)
        return d


def eps_split(eps: float, d: int = 2, beta: float = 1.0, kappa: float = 1.0,
              variant: str = GENERIC) -> tuple[float, float]:
    """Split the target error between estimation (``eps1``) and additive slack (``eps2``)."""
    if not 0 < eps < 1:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    if variant == MAXCUT:
        return eps / 16, eps / 16
    if variant == KDENSE:
        return eps / 8, eps / 8
    if variant != GENERIC:
        raise InputError(f"unknown variant {variant!r}")
    if d < 2:
        raise InputError(f"the generic split needs degree >= 2, got {d}")
    return eps / (4 * d * (d - 1) * beta * kappa), eps / (8 * (d - 1))


# ---------------------------------------------------------------- engine


@dataclass(frozen=True)
class _Job:
    poly: SmoothPolynomial
    tree: DecompositionTree
    variant: str
    eps1: float
    eps2: float
    delta: float
    sample: Sample
    explicit: tuple | None  # assignments for planted/random modes; None = exhaustive
    trials: int
    seed: int
    lp_tol: float
    cert: SmoothnessCertificate | None = None
    k: int | None = None
    graph: Graph | None = None
    scorer: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass
class _Partial:
    best: tuple | None = None  # (value, ordinal, z, fractional objective, deviation pass, repair moves)
    tried: int = 0
    infeasible: int = 0
    widened: int = 0
    solver_errors: int = 0
    deviation_passed: int = 0

    def offer(self, cand: tuple) -> None:
        if self.best is None or (cand[0], -cand[1]) > (self.best[0], -self.best[1]):
            self.best = cand

    def merge(self, other: _Partial) -> None:
        if other.best is not None:
            self.offer(other.best)
        self.tried += other.tried
        self.infeasible += other.infeasible
        self.widened += other.widened
        self.solver_errors += other.solver_errors
        self.deviation_passed += other.deviation_passed


def _box_only(program: RelaxProgram) -> RelaxProgram:
    return RelaxProgram(program.n, program.constant, program.objective, (), program.variant)


def _solve_program(job: _Job, est, widen: bool, part: _Partial):
    """Build and solve the relaxation.

    With ``widen``, an infeasible program is rebuilt with ``eps1`` and
    ``eps2`` scaled by the smallest power of two that admits a point (all
    rows are dropped as a last resort).
    """
    program = build_program(job.tree, est, job.eps1, job.eps2, job.delta, job.variant, k=job.k)
    if not widen:
        return program, solve(program, job.lp_tol)
    factor, sol = solve_widened(program, job.lp_tol)
    if factor == 1.0:
        return program, sol
    part.infeasible += 1
    part.widened += 1
    if not math.isfinite(factor):
        program = _box_only(program)
        return program, solve(program, job.lp_tol)
    program = build_program(job.tree, est, job.eps1 * factor, job.eps2 * factor,
                            job.delta, job.variant, k=job.k)
    return program, FractionalSolution(sol.y, program.objective_value(sol.y), sol.status,
                                       sol.iterations)


def _run_range(job: _Job, start: int, stop: int, widen: bool) -> _Partial:
    part = _Partial()
    for ordinal in range(start, stop):
        if job.explicit is None:
            s = exhaustive_assignment(job.sample.distinct, ordinal)
        else:
            s = job.explicit[ordinal]
        part.tried += 1
        est = estimate(job.tree, job.sample, s)
        if job.cert is not None:
            check_aggregate_bounds(est, job.cert)
        try:
            program, sol = _solve_program(job, est, widen, part)
        except SolverError:
            part.solver_errors += 1
            continue
        if not sol.optimal:
            if not widen:
                part.infeasible += 1
            continue
        rng = np.random.default_rng(np.random.SeedSequence(job.seed, spawn_key=(_ROUND_KEY, ordinal)))
        z = round_solution(sol, program, job.trials, rng, score=job.scorer)
        passed = check_program_deviation(z, program).passed
        moves = 0
        if job.variant == KDENSE:
            z, moves = repair(job.graph, z, job.k)
        z = tuple(int(b) for b in z)
        part.deviation_passed += passed
        part.offer((evaluate(job.poly, z), ordinal, z, sol.objective_value, passed, moves))
    return part


def _run_range_star(args) -> _Partial:
    return _run_range(*args)


def _dispatch(job: _Job, total: int, widen: bool, workers: int) -> _Partial:
    if workers <= 1 or total < 2:
        return _run_range(job, 0, total, widen)
    chunks = min(total, workers * 4)
    bounds = [total * i // chunks for i in range(chunks + 1)]
    tasks = [(job, bounds[i], bounds[i + 1], widen) for i in range(chunks)]
    out = _Partial()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_range_star, tasks):
            out.merge(part)
    return out


def _draw(n: int, r: int, cfg: SchemeConfig, mode: str) -> Sample:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=_SAMPLE_KEY))
    return draw_sample(n, r, rng, cap=cfg.cap if mode == "exhaustive" else None)


def _execute(problem: str, poly: SmoothPolynomial, tree: DecompositionTree, variant: str,
             eps1: float, eps2: float, r: int, cfg: SchemeConfig, x_star, oracle_fn,
             cert=None, k=None, graph=None, extra=None) -> RunReport:
    t0 = time.perf_counter()
    mode = cfg.mode or ("planted" if x_star is not None else "exhaustive")
    if mode == "planted" and x_star is None and not cfg.oracle_compare:
        raise InputError("planted mode needs a reference assignment or oracle comparison")
    sample = _draw(poly.n, r, cfg, mode)
    timings = {}
    oracle_value = None
    if cfg.oracle_compare:
        t = time.perf_counter()
        oracle_x, oracle_value = oracle_fn()
        timings["oracle"] = time.perf_counter() - t
        if x_star is None:
            x_star = oracle_x
    if mode == "exhaustive":
        explicit = None
        total = 2 ** len(sample.distinct)
    elif mode == "planted":
        explicit = tuple(assignments(sample, "planted", x_star=x_star))
        total = 1
    else:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=_RANDOM_MODE_KEY))
        explicit = tuple(assignments(sample, "random", k=cfg.random_k, rng=rng))
        total = len(explicit)
    if cfg.max_assignments is not None:
        total = min(total, cfg.max_assignments)

    scorer = BatchEvaluator(poly) if variant != KDENSE else _RepairedEdges(graph, k)
    job = _Job(poly, tree, variant, eps1, eps2, cfg.delta, sample, explicit, cfg.trials,
               cfg.seed, cfg.lp_tol, cert, k, graph, scorer)
    t = time.perf_counter()
    widen_all = cfg.on_infeasible == "widen"
    part = _dispatch(job, total, widen=widen_all, workers=cfg.workers)
    fallback = part.best is None and not widen_all
    if fallback:
        # every program was infeasible and skipped; widen them instead
        retry = _dispatch(job, total, widen=True, workers=cfg.workers)
        part.best = retry.best
        part.widened += retry.widened
        part.solver_errors += retry.solver_errors
        part.deviation_passed += retry.deviation_passed
    timings["pipeline"] = time.perf_counter() - t
    if part.best is None:
        raise SolverError("no sample assignment produced a solvable relaxation")
    value, ordinal, z, frac_obj, passed, moves = part.best
    if evaluate(poly, z) != value:
        raise AssertionError("reported value does not match a fresh evaluation")
    timings["total"] = time.perf_counter() - t0
    extra = dict(extra or {})
    if variant == KDENSE:
        extra["repair_moves"] = moves
    return RunReport(
        problem=problem, n=poly.n, assignment=z, value=value,
        fractional_objective=frac_obj, oracle_value=oracle_value,
        eps1=eps1, eps2=eps2, mode=mode, sample_r=sample.r,
        sample_distinct=len(sample.distinct),
        counters={
            "assignments_tried": part.tried,
            "lp_infeasible": part.infeasible,
            "lp_widened": part.widened,
            "widening_fallback": fallback,
            "solver_errors": part.solver_errors,
            "deviation_passed": part.deviation_passed,
            "winning_ordinal": ordinal,
            "winner_deviation_passed": bool(passed),
        },
        extra=extra, config=cfg.to_dict(), timings=timings,
    )


# ---------------------------------------------------------------- front-ends


def approximate_maxcut(g: Graph, cfg: SchemeConfig, x_star: Sequence[int] | None = None) -> RunReport:
    """Cut of ``g`` through the sampled relaxation pipeline."""
    if g.m < 1:
        raise InputError("Max-Cut needs at least one edge")
    p = from_graph_maxcut(g)
    tree = decompose(p, MAXCUT_SYMMETRIC)
    eps1, eps2 = eps_split(cfg.eps, variant=MAXCUT)
    r = cfg.sample_size or maxcut_sample_size(g.n, g.average_degree, eps1, eps2, cfg.gamma_scale)
    return _execute("maxcut", p, tree, MAXCUT, eps1, eps2, r, cfg, _tuple(x_star, g.n),
                    lambda: oracle.brute_force_max(p), cert=certify(p, cfg.delta),
                    extra={"m": g.m})


def _tuple(x, n):
    if x is None:
        return None
    x = tuple(int(b) for b in x)
    if len(x) != n or any(b not in (0, 1) for b in x):
        raise InputError(f"reference assignment must be a binary vector of length {n}")
    return x


def _trivial_report(problem: str, p: SmoothPolynomial, z, cfg: SchemeConfig, note: str) -> RunReport:
    t0 = time.perf_counter()
    oracle_value = oracle.brute_force_max(p)[1] if cfg.oracle_compare else None
    return RunReport(problem=problem, n=p.n, assignment=z, value=evaluate(p, z),
                     oracle_value=oracle_value, mode="exact",
                     counters={"assignments_tried": 0}, extra={"solved_exactly": note},
                     config=cfg.to_dict(), timings={"total": time.perf_counter() - t0})


def maximize_smooth(p: SmoothPolynomial, cfg: SchemeConfig,
                    x_star: Sequence[int] | None = None) -> RunReport:
    """Approximate maximizer of ``p``; degree <= 1 is solved exactly."""
    if p.is_constant:
        return _trivial_report("smooth", p, (0,) * p.n, cfg, "constant")
    if p.d == 1:
        z = tuple(int(p.coefficient((j,)) > 0) for j in range(p.n))
        return _trivial_report("smooth", p, z, cfg, "linear")
    cert = certify(p, cfg.delta)
    tree = decompose(p, CANONICAL_LEX)
    eps1, eps2 = eps_split(cfg.eps, p.d, cert.beta, cert.kappa, GENERIC)
    r = cfg.sample_size or sample_size(p.n, cfg.delta, eps1, eps2, cfg.gamma_scale, p.d, cert.beta)
    extra = {"d": p.d, "beta": cert.beta, "kappa": cert.kappa,
             "additive_bound": cfg.eps * cert.kappa * p.n ** (p.d - 1 + cfg.delta)}
    return _execute("smooth", p, tree, GENERIC, eps1, eps2, r, cfg, _tuple(x_star, p.n),
                    lambda: oracle.brute_force_max(p), cert=cert, extra=extra)


def approximate_kcsp(inst: Instance, cfg: SchemeConfig,
                     x_star: Sequence[int] | None = None) -> RunReport:
    """Assignment for a k-CSP via its counting polynomial; reports the direct recount."""
    csp = to_csp(inst)
    if csp.m == 0:
        raise InputError("instance has no constraints")
    p = arithmetize(inst)
    report = maximize_smooth(p, cfg, x_star)
    report.problem = "csp"
    satisfied = count_satisfied(inst, report.assignment)
    if satisfied != report.value:
        raise AssertionError("satisfied count disagrees with the counting polynomial")
    k = csp.k
    floor = csp.m / 2**k
    report.extra.update({"m": csp.m, "k": k, "satisfied": satisfied,
                         "trivial_lower_bound": floor})
    if "additive_bound" in report.extra:
        report.extra["ratio_guarantee"] = 1 - report.extra["additive_bound"] / floor
    return report


def repair(g: Graph, z, k: int) -> tuple[np.ndarray, int]:
    """Add or drop vertices until exactly ``k`` are selected.

    Adds the outside vertex with the most selected neighbours, or drops the
    selected vertex with the fewest; ties go to the lowest index.
    """
    z = np.array(z, dtype=np.int8)
    moves = 0
    nbrs = g.neighbors
    while int(z.sum()) != k:
        inside = [sum(z[u] for u in nbrs[v]) for v in range(g.n)]
        if z.sum() < k:
            v = max((v for v in range(g.n) if not z[v]), key=lambda v: (inside[v], -v))
            z[v] = 1
        else:
            v = min((v for v in range(g.n) if z[v]), key=lambda v: (inside[v], v))
            z[v] = 0
        moves += 1
    return z, moves


class _RepairedEdges:
    """Batch score for k-dense roundings: induced edges after :func:`repair`."""

    def __init__(self, g: Graph, k: int):
        self.g, self.k = g, k
        self.edges = np.array(g.edges, dtype=np.int64).reshape(-1, 2)

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        fixed = np.array([repair(self.g, z, self.k)[0] for z in Z])
        return (fixed[:, self.edges[:, 0]] * fixed[:, self.edges[:, 1]]).sum(axis=1).astype(float)


def _enumerate_kdense(g: Graph, k: int) -> tuple[tuple[int, ...], int]:
    adj = np.zeros((g.n, g.n), dtype=np.int64)
    for u, v in g.edges:
        adj[u, v] = adj[v, u] = 1
    best_val, best_set = -1, None
    combos = itertools.combinations(range(g.n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, 65536)), dtype=np.int64).reshape(-1, k)
        if not len(chunk):
            break
        vals = adj[chunk[:, :, None], chunk[:, None, :]].sum(axis=(1, 2)) // 2
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_set = int(vals[i]), chunk[i]
    z = np.zeros(g.n, dtype=np.int64)
    z[best_set] = 1
    return tuple(int(b) for b in z), best_val


def approximate_kdense(g: Graph, k: int, cfg: SchemeConfig,
                       x_star: Sequence[int] | None = None) -> RunReport:
    """Densest ``k``-subgraph: exact enumeration when small, else the sampled pipeline."""
    if not 1 <= k <= g.n:
        raise InputError(f"k must lie in 1..{g.n}, got {k}")
    threshold = g.n ** (1 - cfg.delta / 3)
    p = from_graph_kdense(g)
    if math.comb(g.n, k) <= cfg.kdense_budget:
        t0 = time.perf_counter()
        z, value = _enumerate_kdense(g, k)
        oracle_value = oracle.brute_force_kdense(g, k) if cfg.oracle_compare else None
        return RunReport(problem="kdense", n=g.n, assignment=z, value=value,
                         oracle_value=oracle_value, mode="enumeration",
                         counters={"assignments_tried": 0},
                         extra={"branch": "enumeration", "k": k, "m": g.m,
                                "asymptotic_threshold": threshold},
                         config=cfg.to_dict(), timings={"total": time.perf_counter() - t0})
    if g.m == 0:
        z = (1,) * k + (0,) * (g.n - k)
        return RunReport(problem="kdense", n=g.n, assignment=z, value=0, mode="exact",
                         counters={"assignments_tried": 0},
                         extra={"branch": "edgeless", "k": k, "m": 0},
                         config=cfg.to_dict())
    tree = decompose(p, MAXCUT_SYMMETRIC)
    eps1, eps2 = eps_split(cfg.eps, variant=KDENSE)
    r = cfg.sample_size or kdense_sample_size(g.n, cfg.delta, eps1, eps2, cfg.gamma_scale)
    report = _execute("kdense", p, tree, KDENSE, eps1, eps2, r, cfg, _tuple(x_star, g.n),
                      lambda: oracle.kdense_argmax(g, k), cert=certify(p, cfg.delta),
                      k=k, graph=g,
                      extra={"branch": "sampled", "k": k, "m": g.m,
                             "asymptotic_threshold": threshold})
    if sum(report.assignment) != k:
        raise AssertionError("repair did not reach the target cardinality")
    return report
