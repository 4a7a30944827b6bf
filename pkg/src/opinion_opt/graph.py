"""Undirected simple graphs and the neighbour-averaging (random-walk) operator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp


class GraphParseError(ValueError):
    """Malformed edge-list line."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class GraphValidationError(ValueError):
    """Edge list parses but does not describe a valid graph."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph stored as CSR neighbour lists.

    ``indptr``/``indices`` follow the scipy CSR convention; each node's
    neighbours are sorted ascending so iteration order is deterministic.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    _P: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        deg = np.diff(self.indptr)
        data = np.repeat(1.0 / np.maximum(deg, 1), deg)
        P = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
        object.__setattr__(self, "_P", P)
        for arr in (self.indptr, self.indices):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph on nodes ``0..n-1``; duplicates (either orientation) collapse."""
        if n < 1:
            raise GraphValidationError("graph must have at least one node")
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphValidationError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphValidationError(f"edge ({u}, {v}) has endpoint outside [0, {n})")
            pairs.add((min(u, v), max(u, v)))
        if pairs:
            e = np.array(sorted(pairs), dtype=np.int64)
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        deg = np.bincount(rows, minlength=n)
        isolated = np.flatnonzero(deg == 0)
        if isolated.size:
            raise GraphValidationError(f"node {int(isolated[0])} is isolated (degree 0)")
        indptr = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
        return cls(n, indptr, cols.astype(np.int64))

    @classmethod
    def from_networkx(cls, G) -> "Graph":
        """Convert a networkx graph whose nodes are ``0..n-1``."""
        return cls.from_edges(G.number_of_nodes(), G.edges())

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    @property
    def transition(self) -> sp.csr_matrix:
        """Sparse row-stochastic matrix P with ``P[i, j] = 1/deg(i)`` on edges."""
        return self._P

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` with ``u < v``, sorted."""
        out = []
        for u in range(self.n):
            for v in self.neighbors(u):
                if u < v:
                    out.append((u, int(v)))
        return out

    def dense_transition(self) -> np.ndarray:
        return self._P.toarray()

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def random_walk_apply(g: Graph, x) -> np.ndarray:
    """Return ``P @ x``: each entry is the mean of ``x`` over that node's neighbours."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != g.n:
        raise ValueError(f"vector length {x.shape[0]} does not match graph size {g.n}")
    return g.transition @ x


def parse_edge_list(stream: str | TextIO) -> Graph:
    """Parse an unweighted edge list.

    One ``u v`` pair per line; blank lines and lines starting with ``#`` are
    skipped. Node count is ``1 + max id``; every id in that range must be
    touched by some edge.

    Raises:
        GraphParseError: a line is not exactly two non-negative integers.
        GraphValidationError: self-loop or isolated node.
    """
    text = stream if isinstance(stream, str) else stream.read()
    edges = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(line_no, f"expected two node ids, got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(line_no, f"node ids must be integers, got {raw!r}") from None
        if u < 0 or v < 0:
            raise GraphParseError(line_no, f"node ids must be non-negative, got {raw!r}")
        if u == v:
            raise GraphValidationError(f"self-loop at line {line_no} (node {u})")
        edges.append((u, v))
    if not edges:
        raise GraphValidationError("edge list contains no edges")
    n = 1 + max(max(e) for e in edges)
    return Graph.from_edges(n, edges)


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def format_edge_list(g: Graph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.edges())


# Small named graphs used by tests and the CLI fixtures.

def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n: int, center: int = 0) -> Graph:
    return Graph.from_edges(n, [(center, j) for j in range(n) if j != center])
