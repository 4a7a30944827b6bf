"""Unbudgeted opinion minimization / maximization over resistance parameters.

Working in ``x = 1 / alpha`` the total opinion is ``1' (X - (X - I) P)^-1 s``
with ``X = diag(x)`` on the box ``[1/u, 1/l]^n``. The objective is not convex
in general (on K2 with ``s = (0, 1)`` it equals ``2 - 1/x_0``), so projected
gradient descent only supplies a starting point; every coordinate is then
snapped to an endpoint with :func:`extremize_coordinates`, which is where
optima live because the objective is linear-fractional in each ``alpha_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .equilibrium import OpinionProfile, total_opinion
from .graph import Graph
from .rank1 import InverseState

TIE_TOL = 1e-12


@dataclass(frozen=True)
class BoxBounds:
    lower: float = 0.001
    upper: float = 1.0

    def __post_init__(self):
        if not (0 < self.lower <= self.upper <= 1):
            raise ValueError(f"need 0 < lower <= upper <= 1, got [{self.lower}, {self.upper}]")

    @property
    def x_lower(self) -> float:
        return 1.0 / self.upper

    @property
    def x_upper(self) -> float:
        return 1.0 / self.lower


@dataclass
class SolverOptions:
    step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    pg_tol: float = 1e-8
    max_iters: int = 10_000
    max_backtracks: int = 60


@dataclass
class InterventionPlan:
    direction: str
    target_set: list[int]
    alpha_assigned: np.ndarray
    objective: float
    baseline_objective: float | None = None
    iterations: int = 0
    pg_norm: float = 0.0
    converged: bool = True
    history: list[float] = field(default_factory=list, repr=False)
    method: str = ""


def _direction_sign(direction: str) -> float:
    if direction in ("min", "minimize"):
        return -1.0
    if direction in ("max", "maximize"):
        return 1.0
    raise ValueError(f"unknown direction {direction!r}")


def _check_x(x, b: BoxBounds, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x has shape {x.shape}, expected ({n},)")
    slack = 1e-12 * b.x_upper
    if np.any(x < b.x_lower - slack) or np.any(x > b.x_upper + slack):
        raise ValueError(f"x outside the feasible box [{b.x_lower}, {b.x_upper}]")
    return x


def _check_unit(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x has shape {x.shape}, expected ({n},)")
    if not np.all(np.isfinite(x)) or np.any(x < 1.0):
        raise ValueError("x entries must be finite and >= 1 (alpha in (0, 1])")
    return x


def x_system_matrix(g: Graph, x) -> np.ndarray:
    """Dense ``X - (X - I) P``."""
    P = g.dense_transition()
    Z = -(np.asarray(x) - 1.0)[:, None] * P
    Z[np.diag_indices_from(Z)] += x
    return Z


def objective_in_x(g: Graph, s, x, bounds: BoxBounds | None = None) -> float:
    """Total equilibrium opinion with ``alpha = 1/x``."""
    x = _check_x(x, bounds, g.n) if bounds is not None else _check_unit(x, g.n)
    return float(np.linalg.solve(x_system_matrix(g, x), np.asarray(s, dtype=float)).sum())


def _value_and_grad(g: Graph, s, x) -> tuple[float, np.ndarray]:
    lu = sla.lu_factor(x_system_matrix(g, x), check_finite=False)
    v = sla.lu_solve(lu, s, check_finite=False)
    w = sla.lu_solve(lu, np.ones(g.n), trans=1, check_finite=False)
    lap_v = v - g.transition @ v
    return float(v.sum()), -w * lap_v


def gradient_in_x(g: Graph, s, x) -> np.ndarray:
    """Gradient of :func:`objective_in_x` with respect to the diagonal ``x``.

    ``d f / d x_i = -w_i ((I - P) v)_i`` where ``Z v = s`` and ``Z' w = 1``.
    """
    x = _check_unit(x, g.n)
    return _value_and_grad(g, np.asarray(s, dtype=float), x)[1]


def extremize_coordinates(g: Graph, s, alpha, bounds: BoxBounds, direction: str = "min") -> np.ndarray:
    """Coordinate sweep snapping each resistance to the better of ``lower``/``upper``.

    Interior coordinates are always moved to an endpoint (ties go to
    ``upper``); endpoint coordinates flip only on an improvement above
    ``1e-12``. Sweeps repeat until a full pass changes nothing.
    """
    sign = _direction_sign(direction)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < bounds.lower) or np.any(alpha > bounds.upper):
        raise ValueError("alpha outside bounds")
    lo, hi = bounds.lower, bounds.upper
    state = InverseState(g, s, alpha)
    changed = True
    while changed:
        changed = False
        for i in range(g.n):
            f_lo, f_hi = state.objectives([i, i], [lo, hi])
            g_lo, g_hi = sign * f_lo, sign * f_hi
            best = hi if g_hi >= g_lo - TIE_TOL else lo
            cur = state.alpha[i]
            if cur != lo and cur != hi:
                state.set_alpha(i, best)
                changed = True
            elif best != cur and max(g_lo, g_hi) - sign * state.F > TIE_TOL:
                state.set_alpha(i, best)
                changed = True
        state.refresh()
    return state.alpha.copy()


def _pgd(g: Graph, s, bounds: BoxBounds, opts: SolverOptions):
    lo, hi = bounds.x_lower, bounds.x_upper
    x = np.full(g.n, 0.5 * (lo + hi))
    f, grad = _value_and_grad(g, s, x)
    history = [f]
    step = opts.step
    pg_norm = float(np.max(np.abs(x - np.clip(x - grad, lo, hi))))
    it = 0
    while pg_norm > opts.pg_tol and it < opts.max_iters:
        t = step
        for _ in range(opts.max_backtracks):
            cand = np.clip(x - t * grad, lo, hi)
            f_new, g_new = _value_and_grad(g, s, cand)
            if f_new <= f + opts.armijo * float(grad @ (cand - x)):
                break
            t *= opts.shrink
        else:
            break
        it += 1
        x, f, grad = cand, f_new, g_new
        history.append(f)
        # warm start the next search from a slightly longer step
        step = t * 2.0
        pg_norm = float(np.max(np.abs(x - np.clip(x - grad, lo, hi))))
    return x, f, it, pg_norm, history


def minimize_unbudgeted(g: Graph, s, bounds: BoxBounds = BoxBounds(), opts: SolverOptions | None = None,
                        alpha=None) -> InterventionPlan:
    """Minimize the total equilibrium opinion, every node targeted.

    Args:
        g: graph.
        s: innate opinions.
        bounds: interval each resistance may be set to.
        opts: projected-gradient settings.
        alpha: original resistances; only used to report ``baseline_objective``.
    """
    opts = opts or SolverOptions()
    s = np.asarray(s, dtype=float)
    if s.shape != (g.n,):
        raise ValueError(f"s has shape {s.shape}, expected ({g.n},)")
    x, f, it, pg_norm, history = _pgd(g, s, bounds, opts)
    alpha_pgd = np.clip(1.0 / x, bounds.lower, bounds.upper)
    alpha_out = extremize_coordinates(g, s, alpha_pgd, bounds, "min")
    objective = total_opinion(g, OpinionProfile(s, alpha_out))
    baseline = None if alpha is None else total_opinion(g, OpinionProfile(s, alpha))
    return InterventionPlan(
        direction="minimize", target_set=list(range(g.n)), alpha_assigned=alpha_out,
        objective=objective, baseline_objective=baseline, iterations=it, pg_norm=pg_norm,
        converged=pg_norm <= opts.pg_tol, history=history, method="pgd",
    )


def maximize_unbudgeted(g: Graph, s, bounds: BoxBounds = BoxBounds(), opts: SolverOptions | None = None,
                        alpha=None) -> InterventionPlan:
    """Maximize by minimizing on the complementary opinions ``1 - s``.

    Since ``P 1 = 1`` the equilibrium of ``1 - s`` is ``1 - z`` for every
    resistance vector, so both problems share the optimal assignment.
    """
    s = np.asarray(s, dtype=float)
    plan = minimize_unbudgeted(g, 1.0 - s, bounds, opts)
    plan.direction = "maximize"
    plan.objective = g.n - plan.objective
    plan.history = [g.n - h for h in plan.history]
    if alpha is not None:
        plan.baseline_objective = total_opinion(g, OpinionProfile(s, alpha))
    return plan


def brute_force_extreme(g: Graph, s, bounds: BoxBounds, direction: str = "min") -> tuple[float, np.ndarray]:
    """Best of all ``2^n`` endpoint assignments (exact by the extreme-value property)."""
    if g.n > 20:
        raise ValueError("brute force limited to n <= 20")
    sign = _direction_sign(direction)
    s = np.asarray(s, dtype=float)
    n = g.n
    codes = np.arange(2 ** n)
    bits = (codes[:, None] >> np.arange(n)) & 1
    alphas = np.where(bits == 1, bounds.upper, bounds.lower)
    P = g.dense_transition()
    mats = np.eye(n)[None] - (1.0 - alphas)[:, :, None] * P[None]
    vals = np.linalg.solve(mats, (alphas * s)[:, :, None])[:, :, 0].sum(axis=1)
    k = int(np.argmax(sign * vals))
    return float(vals[k]), alphas[k]
