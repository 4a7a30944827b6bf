"""Budgeted target-set selection: greedy heuristic, baselines, exhaustive oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import OpinionProfile, total_opinion
from .graph import Graph
from .rank1 import InverseState
from .unbudgeted import BoxBounds, InterventionPlan, _direction_sign

TIE_TOL = 1e-12
EXHAUSTIVE_LIMIT = 1_000_000


class ExhaustiveTooLarge(ValueError):
    """Enumeration would exceed ``EXHAUSTIVE_LIMIT`` assignments."""

    def __init__(self, count: int):
        super().__init__(f"exhaustive search needs {count} evaluations (limit {EXHAUSTIVE_LIMIT})")
        self.count = count


@dataclass
class GreedyState:
    """Committed selections plus the maintained inverse they induce."""

    inv: InverseState
    committed: list[tuple[int, float]] = field(default_factory=list)

    @classmethod
    def initial(cls, g: Graph, p: OpinionProfile) -> "GreedyState":
        return cls(InverseState(g, p.s, p.alpha))

    @property
    def base_inverse(self) -> np.ndarray:
        return self.inv.B

    @property
    def current_objective(self) -> float:
        return self.inv.F

    @property
    def alpha(self) -> np.ndarray:
        return self.inv.alpha

    def commit(self, node: int, value: float):
        # fresh factorization per round keeps rank-1 error from accumulating
        self.committed.append((node, float(value)))
        self.inv.alpha[node] = value
        self.inv.refresh()


def marginal_gain(state: GreedyState, g: Graph, p: OpinionProfile, candidate: int, new_alpha: float) -> float:
    """``f(committed + candidate at new_alpha) - f(committed)`` by a rank-1 update."""
    if any(node == candidate for node, _ in state.committed):
        raise ValueError(f"node {candidate} is already committed")
    if not 0 < new_alpha <= 1:
        raise ValueError("new_alpha must lie in (0, 1]")
    if state.inv.g is not g or p.n != g.n:
        raise ValueError("state was built for a different graph")
    return float(state.inv.objectives([candidate], [new_alpha])[0]) - state.current_objective


def _argbest(scores: np.ndarray) -> int:
    """Index of the maximum, smallest index among entries within TIE_TOL of it."""
    top = np.max(scores)
    return int(np.flatnonzero(scores >= top - TIE_TOL)[0])


def greedy_select(g: Graph, p: OpinionProfile, bounds: BoxBounds, k: int, direction: str = "max",
                  record: list | None = None) -> InterventionPlan:
    """Pick ``min(k, n)`` nodes one at a time by largest marginal gain.

    Every remaining candidate is evaluated at both ``lower`` and ``upper``
    and keeps the better endpoint (ties to ``upper``). If neither endpoint
    helps the node keeps its original resistance and counts as a zero-gain
    pick. Ties between candidates go to the smallest node id.

    ``plan.history[r]`` is the objective after round ``r``, so a single
    call with the largest budget also answers every smaller one.

    Args:
        record: if a list, one ``(round, alpha_before, nodes, values, objectives)``
            tuple per round is appended, for auditing the rank-1 evaluations.
    """
    if k < 1:
        raise ValueError("budget k must be at least 1")
    sign = _direction_sign(direction)
    state = GreedyState.initial(g, p)
    baseline = state.current_objective
    remaining = np.ones(g.n, dtype=bool)
    lo, hi = bounds.lower, bounds.upper
    history = []
    for rnd in range(min(k, g.n)):
        cand = np.flatnonzero(remaining)
        nodes = np.concatenate([cand, cand])
        values = np.concatenate([np.full(cand.size, lo), np.full(cand.size, hi)])
        objs = state.inv.objectives(nodes, values)
        if record is not None:
            record.append((rnd, state.alpha.copy(), nodes, values, objs))
        f0 = state.current_objective
        gain_lo = sign * (objs[:cand.size] - f0)
        gain_hi = sign * (objs[cand.size:] - f0)
        use_hi = gain_hi >= gain_lo - TIE_TOL
        gain = np.where(use_hi, gain_hi, gain_lo)
        chosen = np.where(use_hi, hi, lo)
        keep = gain < 0
        gain[keep] = 0.0
        chosen[keep] = p.alpha[cand[keep]]
        j = _argbest(gain)
        node = int(cand[j])
        state.commit(node, chosen[j])
        remaining[node] = False
        history.append(state.current_objective)
    alpha = state.alpha.copy()
    return InterventionPlan(
        direction="maximize" if sign > 0 else "minimize",
        target_set=[node for node, _ in state.committed],
        alpha_assigned=alpha,
        objective=total_opinion(g, p.with_alpha(alpha)),
        baseline_objective=baseline,
        history=history,
        method="greedy",
    )


def baseline_top_opinion(p: OpinionProfile, k: int) -> list[int]:
    """The ``k`` nodes with the highest innate opinion, ties to smaller id."""
    if not 1 <= k <= p.n:
        raise ValueError(f"k must be in [1, {p.n}]")
    order = np.lexsort((np.arange(p.n), -p.s))
    return sorted(int(i) for i in order[:k])


def baseline_scores(g: Graph, p: OpinionProfile) -> np.ndarray:
    """``deg(i)/2m * s_i / sum_{j ~ i} s_j``; ``inf`` where the neighbour sum is zero."""
    nbr_sum = g.transition @ p.s * g.degree
    with np.errstate(divide="ignore", invalid="ignore"):
        score = (g.degree / (2.0 * g.m)) * p.s / nbr_sum
    score[nbr_sum == 0] = np.inf
    return score


def baseline_score(g: Graph, p: OpinionProfile, k: int) -> list[int]:
    """Top ``k`` nodes by :func:`baseline_scores`.

    Infinite scores come first, ordered by ``s`` descending; all remaining
    ties go to the smaller id.
    """
    if not 1 <= k <= p.n:
        raise ValueError(f"k must be in [1, {p.n}]")
    score = baseline_scores(g, p)
    inf = np.isinf(score)
    finite = np.where(inf, 0.0, score)
    order = np.lexsort((np.arange(g.n), -finite, -np.where(inf, p.s, 0.0), ~inf))
    return sorted(int(i) for i in order[:k])


def apply_targets(g: Graph, p: OpinionProfile, nodes, value: float = 1.0, method: str = "") -> InterventionPlan:
    """Plan that sets the resistance of ``nodes`` to ``value`` (1 for the baselines)."""
    alpha = p.alpha.copy()
    alpha[list(nodes)] = value
    return InterventionPlan(
        direction="maximize", target_set=list(nodes), alpha_assigned=alpha,
        objective=total_opinion(g, p.with_alpha(alpha)),
        baseline_objective=total_opinion(g, p), method=method,
    )


def _batched_objectives(g: Graph, s: np.ndarray, alphas: np.ndarray, chunk: int = 2048) -> np.ndarray:
    P = g.dense_transition()
    eye = np.eye(g.n)
    out = np.empty(alphas.shape[0])
    for start in range(0, alphas.shape[0], chunk):
        a = alphas[start:start + chunk]
        mats = eye[None] - (1.0 - a)[:, :, None] * P[None]
        out[start:start + chunk] = np.linalg.solve(mats, (a * s)[:, :, None])[:, :, 0].sum(axis=1)
    return out


def best_assignment(g: Graph, p: OpinionProfile, bounds: BoxBounds, subset, direction: str = "max") -> tuple[float, np.ndarray]:
    """Optimal endpoint assignment for a fixed target set (others keep their alpha)."""
    sign = _direction_sign(direction)
    subset = list(subset)
    if not subset:
        return total_opinion(g, p), p.alpha.copy()
    codes = np.arange(2 ** len(subset))
    bits = (codes[:, None] >> np.arange(len(subset))) & 1
    alphas = np.tile(p.alpha, (codes.size, 1))
    # code 0 is all-upper so exact ties resolve toward upper
    alphas[:, subset] = np.where(bits == 1, bounds.lower, bounds.upper)
    vals = _batched_objectives(g, p.s, alphas)
    j = _argbest(sign * vals)
    return float(vals[j]), alphas[j]


def exhaustive_count(n: int, k: int) -> int:
    k = min(k, n)
    return math.comb(n, k) * 2 ** k


def exhaustive_opt(g: Graph, p: OpinionProfile, bounds: BoxBounds, k: int, direction: str = "max") -> InterventionPlan:
    """Exact budgeted optimum by enumeration.

    Only subsets of size exactly ``min(k, n)`` are enumerated: adding a node
    to a target set never hurts, since one of its endpoints is at least as
    good as its original resistance.
    """
    if k < 1:
        raise ValueError("budget k must be at least 1")
    count = exhaustive_count(g.n, k)
    if count > EXHAUSTIVE_LIMIT:
        raise ExhaustiveTooLarge(count)
    sign = _direction_sign(direction)
    best = None
    for subset in itertools.combinations(range(g.n), min(k, g.n)):
        val, alpha = best_assignment(g, p, bounds, subset, direction)
        if best is None or sign * val > sign * best[0] + TIE_TOL:
            best = (val, alpha, subset)
    val, alpha, subset = best
    return InterventionPlan(
        direction="maximize" if sign > 0 else "minimize", target_set=list(subset),
        alpha_assigned=alpha, objective=val, baseline_objective=total_opinion(g, p),
        method="exhaustive",
    )
