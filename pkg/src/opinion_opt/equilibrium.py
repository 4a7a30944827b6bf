"""Equilibrium of the averaging dynamics with stubborn (resistant) agents.

Each agent repeatedly sets

    x_i <- alpha_i * s_i + (1 - alpha_i) * mean_{j ~ i} x_j

and the fixed point solves ``(I - (I - A) P) z = A s`` with ``A = diag(alpha)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import Graph

DENSE_LIMIT = 4096
WALK_STEP_CAP = 10_000_000


class EquilibriumSolverError(RuntimeError):
    """The linear solve failed to reach its residual guarantee."""


@dataclass(frozen=True, eq=False)
class OpinionProfile:
    """Innate opinions ``s`` in [0, 1] and resistances ``alpha`` in (0, 1]."""

    s: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        if s.ndim != 1 or alpha.shape != s.shape:
            raise ValueError(f"s and alpha must be 1-d of equal length, got {s.shape} and {alpha.shape}")
        if not np.all((s >= 0) & (s <= 1)):
            raise ValueError("innate opinions must lie in [0, 1]")
        if not np.all((alpha > 0) & (alpha <= 1)):
            raise ValueError("resistance parameters must lie in (0, 1]")
        s.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.s.shape[0]

    def with_alpha(self, alpha) -> "OpinionProfile":
        return OpinionProfile(self.s, alpha)


@dataclass
class EquilibriumResult:
    z: np.ndarray
    objective: float
    method: str
    residual: float
    iterations: int = 0
    converged: bool = True


def _check(g: Graph, p: OpinionProfile):
    if p.n != g.n:
        raise ValueError(f"profile has {p.n} nodes but graph has {g.n}")


def system_matrix(g: Graph, alpha) -> np.ndarray:
    """Dense ``I - (I - A) P``."""
    alpha = np.asarray(alpha, dtype=float)
    M = -(1.0 - alpha)[:, None] * g.dense_transition()
    M[np.diag_indices_from(M)] += 1.0
    return M


def sparse_system_matrix(g: Graph, alpha) -> sp.csc_matrix:
    alpha = np.asarray(alpha, dtype=float)
    return (sp.identity(g.n, format="csr") - sp.diags(1.0 - alpha) @ g.transition).tocsc()


def residual_norm(g: Graph, p: OpinionProfile, z) -> float:
    """Infinity norm of ``(I - (I-A)P) z - A s``."""
    z = np.asarray(z, dtype=float)
    r = z - (1.0 - p.alpha) * (g.transition @ z) - p.alpha * p.s
    return float(np.max(np.abs(r)))


def solve_equilibrium(g: Graph, p: OpinionProfile) -> EquilibriumResult:
    """Solve for the equilibrium opinions by direct factorization.

    Dense LU with partial pivoting up to ``DENSE_LIMIT`` nodes, sparse LU
    beyond. One step of iterative refinement is applied if the first
    residual misses the tolerance.
    """
    _check(g, p)
    b = p.alpha * p.s
    if g.n <= DENSE_LIMIT:
        lu = sla.lu_factor(system_matrix(g, p.alpha), check_finite=False)
        solve = lambda rhs: sla.lu_solve(lu, rhs, check_finite=False)  # noqa: E731
    else:
        solve = spla.splu(sparse_system_matrix(g, p.alpha)).solve
    z = solve(b)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(b))))
    res = residual_norm(g, p, z)
    if res > tol:
        r = b - (z - (1.0 - p.alpha) * (g.transition @ z))
        z = z + solve(r)
        res = residual_norm(g, p, z)
    if not np.all(np.isfinite(z)) or res > tol:
        raise EquilibriumSolverError(f"direct solve residual {res:.3e} exceeds {tol:.3e} (n={g.n})")
    return EquilibriumResult(z=z, objective=float(z.sum()), method="direct", residual=res)


def iterate_dynamics(g: Graph, p: OpinionProfile, x0=None, tol: float = 1e-12,
                     max_iters: int = 1_000_000) -> EquilibriumResult:
    """Run the synchronous opinion update until successive iterates agree to ``tol``.

    Non-convergence is reported through ``converged=False`` with the last
    iterate, not raised.
    """
    _check(g, p)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    x = np.zeros(g.n) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({g.n},)")
    P = g.transition
    a_s = p.alpha * p.s
    keep = 1.0 - p.alpha
    converged = False
    it = 0
    while it < max_iters:
        nxt = a_s + keep * (P @ x)
        it += 1
        delta = np.max(np.abs(nxt - x))
        x = nxt
        if delta <= tol:
            converged = True
            break
    return EquilibriumResult(z=x, objective=float(x.sum()), method="fixed-point",
                             residual=residual_norm(g, p, x), iterations=it, converged=converged)


def total_opinion(g: Graph, p: OpinionProfile) -> float:
    """Sum of equilibrium opinions."""
    return solve_equilibrium(g, p).objective


# --- Monte-Carlo absorbing walks -------------------------------------------
#
# Each walk draws its randomness from a counter-based stream keyed by
# (seed, walk index, step, slot), so the estimate does not depend on the
# order in which walks are simulated.

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def _uniform(keys: np.ndarray, counter: int) -> np.ndarray:
    bits = _splitmix(keys + np.uint64((counter * 0x9E3779B97F4A7C15) & _MASK))
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _walk_keys(seed: int, walk_ids: np.ndarray) -> np.ndarray:
    base = _splitmix(np.array([seed & _MASK], dtype=np.uint64))[0]
    return _splitmix(base ^ (walk_ids.astype(np.uint64) * _GOLDEN + np.uint64(1)))


def mc_walk_values(g: Graph, p: OpinionProfile, node: int, walks: int, seed: int,
                   step_cap: int = WALK_STEP_CAP) -> np.ndarray:
    """Innate opinion collected by each absorbing walk; NaN for capped walks."""
    _check(g, p)
    if not 0 <= node < g.n:
        raise ValueError(f"node {node} outside [0, {g.n})")
    if walks < 1:
        raise ValueError("walks must be at least 1")
    keys = _walk_keys(seed, np.arange(walks))
    values = np.full(walks, np.nan)
    active = np.arange(walks)
    pos = np.full(walks, node, dtype=np.int64)
    deg = g.degree
    step = 0
    while active.size and step < step_cap:
        k = keys[active]
        u = _uniform(k, 2 * step + 1)
        stop = u < p.alpha[pos]
        values[active[stop]] = p.s[pos[stop]]
        move = ~stop
        active, pos, k = active[move], pos[move], k[move]
        if active.size:
            v = _uniform(k, 2 * step + 2)
            offset = np.minimum((v * deg[pos]).astype(np.int64), deg[pos] - 1)
            pos = g.indices[g.indptr[pos] + offset]
        step += 1
    return values


def mc_estimate(g: Graph, p: OpinionProfile, node: int, walks: int, seed: int) -> tuple[float, float]:
    """Estimate ``z[node]`` as the mean innate opinion at the absorption point.

    Returns ``(estimate, stderr)``. Walks that hit ``WALK_STEP_CAP`` are
    dropped with a warning.
    """
    values = mc_walk_values(g, p, node, walks, seed)
    capped = np.isnan(values)
    if capped.any():
        warnings.warn(f"{int(capped.sum())} of {walks} walks hit the step cap and were dropped",
                      RuntimeWarning, stacklevel=2)
        values = values[~capped]
    if values.size == 0:
        raise EquilibriumSolverError("every walk hit the step cap")
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    est = float(np.sum(values) / values.size)
    if values.size < 2:
        return est, 0.0
    return est, float(np.std(values, ddof=1) / np.sqrt(values.size))
