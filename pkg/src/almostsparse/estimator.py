"""Random variable samples, sample assignments, and recursive estimation.

For one assignment ``s`` of the sampled variables, every node of the
decomposition tree receives an estimate of its polynomial's value at an
optimum that agrees with ``s`` on the sample::

    rho(node) = c(node) + (n / r) * sum_{j in R} s_j * rho(node + j)

where the sum runs over the sample multiset (duplicates counted).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .poly import DecompositionTree, SmoothnessCertificate

DEFAULT_CAP = 22


@dataclass(frozen=True)
class Sample:
    """Multiset of ``r`` variable indices drawn uniformly with replacement."""

    n: int
    indices: tuple[int, ...]

    def __post_init__(self):
        if not self.indices:
            raise InputError("a sample needs at least one index")
        if any(not 0 <= i < self.n for i in self.indices):
            raise InputError(f"sample index out of range for n={self.n}")

    @property
    def r(self) -> int:
        return len(self.indices)

    @cached_property
    def counts(self) -> dict[int, int]:
        return dict(sorted(Counter(self.indices).items()))

    @property
    def distinct(self) -> tuple[int, ...]:
        return tuple(self.counts)


def draw_sample(n: int, r: int, rng: np.random.Generator, cap: int | None = None) -> Sample:
    """Draw ``r`` indices from ``range(n)`` with replacement.

    With ``cap`` set (exhaustive mode), more than ``cap`` distinct indices
    is a configuration error.
    """
    if r < 1:
        raise InputError(f"sample size must be >= 1, got {r}")
    if n < 1:
        raise InputError("cannot sample from zero variables")
    idx = tuple(int(i) for i in rng.integers(0, n, size=r))
    sample = Sample(n, idx)
    if cap is not None and len(sample.distinct) > cap:
        raise ConfigurationError(
            f"sample has {len(sample.distinct)} distinct indices, exceeding the exhaustion cap {cap}"
        )
    return sample


def _capped(value: float, n: int) -> int:
    return max(1, min(n, math.ceil(value)))


def sample_size(n: int, delta: float, eps1: float, eps2: float,
                gamma_scale: float = 1.0, d: int = 2, beta: float = 1.0) -> int:
    """``ceil(gamma_scale * d(d-1) beta / (eps1^2 eps2) * n^(1-delta) * ln n)``, capped at ``n``."""
    gamma = gamma_scale * d * (d - 1) * beta / (eps1**2 * eps2)
    return _capped(gamma * n ** (1 - delta) * math.log(n), n)


def maxcut_sample_size(n: int, avg_degree: float, eps1: float, eps2: float,
                       gamma_scale: float = 1.0) -> int:
    """``gamma * n ln n / Delta`` with ``gamma = gamma_scale / (eps1^2 eps2)``, capped at ``n``."""
    gamma = gamma_scale / (eps1**2 * eps2)
    return _capped(gamma * n * math.log(n) / max(avg_degree, 1e-12), n)


def kdense_sample_size(n: int, delta: float, eps1: float, eps2: float,
                       gamma_scale: float = 1.0) -> int:
    """``gamma * n^(1-delta/3) ln n`` with ``gamma = gamma_scale / (eps1^2 eps2)``, capped at ``n``."""
    gamma = gamma_scale / (eps1**2 * eps2)
    return _capped(gamma * n ** (1 - delta / 3) * math.log(n), n)


@dataclass(frozen=True)
class NodeEstimate:
    rho: float
    rho_bar: float
    t_bar: float


@dataclass(frozen=True)
class EstimationTree:
    """Per-node estimates mirroring a :class:`DecompositionTree`."""

    tree: DecompositionTree
    nodes: Mapping[tuple[int, ...], NodeEstimate]

    def rho(self, key: tuple[int, ...]) -> float:
        e = self.nodes.get(key)
        return e.rho if e is not None else 0.0

    def level_rho_bar_sum(self, level: int) -> float:
        return sum(self.nodes[nd.key].rho_bar for nd in self.tree.at_level(level))

    def top_t_bar_sum(self) -> float:
        return sum(self.nodes[(j,)].t_bar for j in self.tree.root.children)

    def neighbor_estimate(self, j: int) -> float:
        """For symmetric degree-2 trees: the implied estimate of ``sum_{i in N(j)} x_i``.

        Inverts ``rho_j = c_j + a * count`` where ``a`` is the (shared)
        leaf coefficient under node ``j``; ``-1`` for Max-Cut, ``1/2`` for
        k-Densest.
        """
        nd = self.tree.nodes.get((j,))
        if nd is None or not nd.children:
            return 0.0
        a = float(self.tree.nodes[(j, nd.children[0])].constant)
        return (self.nodes[(j,)].rho - float(nd.constant)) / a


def _post_order(tree: DecompositionTree) -> list[tuple[int, ...]]:
    return sorted(tree.nodes, key=lambda k: -len(k))


def estimate(tree: DecompositionTree, sample: Sample, s: Mapping[int, int]) -> EstimationTree:
    """Run the recursive estimation for one assignment ``s`` of the sampled variables.

    Estimates are clamped into the range the target value can take given
    the child estimates, ``[c + sum of negative children, c + sum of positive
    children]``, and into ``|rho| <= (l+1) beta n^l`` at level ``l``. Both
    intervals contain the quantity being estimated, so clamping never moves
    an estimate away from it. For a Max-Cut tree this is ``0 <= neighbour
    estimate <= deg(j)``.
    """
    missing = [j for j in sample.distinct if j not in s]
    if missing:
        raise InputError(f"no assignment for sampled indices {missing}")
    n = tree.n
    scale = n / sample.r
    weight = {j: c * int(s[j]) for j, c in sample.counts.items()}
    beta = tree.beta
    out: dict[tuple[int, ...], NodeEstimate] = {}
    for key in _post_order(tree):
        nd = tree.nodes[key]
        if nd.level == 0:
            out[key] = NodeEstimate(float(nd.constant), 0.0, 0.0)
            continue
        c = float(nd.constant)
        pos = neg = raw = t_sum = 0.0
        for j in nd.children:
            ch = out[key + (j,)]
            if ch.rho > 0:
                pos += ch.rho
            else:
                neg += ch.rho
            t_sum += ch.t_bar
            w = weight.get(j)
            if w:
                raw += w * ch.rho
        rho_bar = pos - neg
        t_bar = rho_bar if nd.level == 1 else rho_bar + t_sum
        bound = (nd.level + 1) * beta * float(n) ** nd.level
        lo = max(c + neg, -bound)
        hi = min(c + pos, bound)
        rho = min(max(c + scale * raw, lo), hi)
        out[key] = NodeEstimate(rho, rho_bar, t_bar)
    return EstimationTree(tree, out)


def check_aggregate_bounds(est: EstimationTree, cert: SmoothnessCertificate,
                           rtol: float = 1e-9) -> None:
    """Assert the level-wise absolute-estimation and cumulative-estimation budgets."""
    tree = est.tree
    d = tree.d
    if d < 2:
        return
    unit = cert.kappa * cert.beta * float(tree.n) ** (d - 1 + cert.delta) * (1 + rtol)
    for level in range(1, d):
        total = est.level_rho_bar_sum(level)
        if total > level * unit:
            raise AssertionError(f"level-{level} absolute estimations sum {total} > {level * unit}")
    top = est.top_t_bar_sum()
    if top > d * (d - 1) / 2 * unit:
        raise AssertionError(f"cumulative estimations sum {top} > {d * (d - 1) / 2 * unit}")


def exhaustive_assignment(distinct: Sequence[int], ordinal: int) -> dict[int, int]:
    """The ``ordinal``-th assignment in lexicographic order (first index most significant)."""
    u = len(distinct)
    return {j: (ordinal >> (u - 1 - pos)) & 1 for pos, j in enumerate(distinct)}


def assignments(sample: Sample, mode: str = "exhaustive", *,
                x_star: Sequence[int] | None = None,
                k: int | None = None,
                rng: np.random.Generator | None = None,
                cap: int = DEFAULT_CAP) -> Iterator[dict[int, int]]:
    """Assignments of the sampled variables to try.

    ``exhaustive`` walks all ``2^u`` assignments of the ``u`` distinct
    indices, ``planted`` yields the restriction of ``x_star``, ``random``
    yields ``k`` seeded draws.
    """
    distinct = sample.distinct
    if mode == "exhaustive":
        if len(distinct) > cap:
            raise ConfigurationError(
                f"{len(distinct)} distinct sampled indices exceed the exhaustion cap {cap}"
            )
        return (exhaustive_assignment(distinct, o) for o in range(2 ** len(distinct)))
    if mode == "planted":
        if x_star is None or len(x_star) != sample.n:
            raise InputError("planted mode needs a full assignment x_star of length n")
        return iter([{j: int(x_star[j]) for j in distinct}])
    if mode == "random":
        if k is None or k < 1 or rng is None:
            raise InputError("random mode needs k >= 1 and an rng")
        draws = rng.integers(0, 2, size=(k, len(distinct)))
        return ({j: int(b) for j, b in zip(distinct, row)} for row in draws)
    raise InputError(f"unknown mode {mode!r}")
