"""Sherman-Morrison evaluation of single-node resistance changes.

Changing ``alpha_i`` by ``delta`` adds ``delta * e_i P[i, :]`` to the system
matrix ``M = I - (I - A) P`` and ``delta * s_i e_i`` to the right-hand side.
With ``B = M^-1`` cached, the new total opinion is

    (F + delta * (F d_i + s_i w_i - w_i (P z)_i)) / (1 + delta d_i)

where ``F = 1'z``, ``z = B A s``, ``w = B' 1`` and ``d_i = (P B)_ii``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .equilibrium import system_matrix
from .graph import Graph

SINGULAR_EPS = 1e-12


class InverseState:
    """Dense inverse of the equilibrium system plus the vectors the update formula needs."""

    def __init__(self, g: Graph, s, alpha):
        self.g = g
        self.s = np.asarray(s, dtype=float)
        self.alpha = np.array(alpha, dtype=float)
        self.refresh()

    def refresh(self):
        """Recompute the inverse from scratch for the current ``alpha``."""
        M = system_matrix(self.g, self.alpha)
        self.B = sla.inv(M, check_finite=False)
        self._derive()

    def _derive(self):
        P = self.g.transition
        self.z = self.B @ (self.alpha * self.s)
        self.F = float(self.z.sum())
        self.w = self.B.sum(axis=0)
        self.Pz = P @ self.z
        self.d = np.asarray(P.multiply(self.B.T).sum(axis=1)).ravel()

    def objectives(self, nodes, new_alpha) -> np.ndarray:
        """Total opinion after setting ``alpha[nodes[k]] = new_alpha[k]``, one node at a time."""
        nodes = np.atleast_1d(np.asarray(nodes, dtype=np.int64))
        new_alpha = np.broadcast_to(np.asarray(new_alpha, dtype=float), nodes.shape)
        delta = new_alpha - self.alpha[nodes]
        d, w = self.d[nodes], self.w[nodes]
        denom = 1.0 + delta * d
        num = self.F + delta * (self.F * d + self.s[nodes] * w - w * self.Pz[nodes])
        out = np.empty(nodes.shape)
        ok = np.abs(denom) > SINGULAR_EPS
        out[ok] = num[ok] / denom[ok]
        for k in np.flatnonzero(~ok):
            out[k] = self._fresh_objective(nodes[k], new_alpha[k])
        return out

    def _fresh_objective(self, node, value) -> float:
        alpha = self.alpha.copy()
        alpha[node] = value
        M = system_matrix(self.g, alpha)
        return float(np.linalg.solve(M, alpha * self.s).sum())

    def set_alpha(self, node: int, value: float, fresh: bool = False):
        """Commit a single-node change, by rank-1 update unless ``fresh``."""
        delta = value - self.alpha[node]
        self.alpha[node] = value
        if delta == 0.0:
            return
        denom = 1.0 + delta * self.d[node]
        if fresh or abs(denom) <= SINGULAR_EPS:
            self.refresh()
            return
        col = self.B[:, node].copy()
        row = self.g.transition[node] @ self.B
        self.B -= np.outer(col, (delta / denom) * np.asarray(row).ravel())
        self._derive()
