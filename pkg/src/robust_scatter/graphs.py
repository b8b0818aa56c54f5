"""Sparsity patterns for inverse scatter matrices.

Vertices are 0-based in Python (``0..p-1``). The JSON form uses 1-based
indices, ``{"p": int, "edges": [[i, j], ...]}``, so that patterns written by
hand read like the usual mathematical notation.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import itertools
import json

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidBandwidth,
    InvalidPermutation,
    InvalidSize,
    NonChordalPattern,
)

G_SPARSE_TOL = 1e-9


@dataclass(frozen=True)
class SparsityPattern:
    """Undirected graph on ``p`` vertices giving the allowed off-diagonal support.

    Diagonal entries are always allowed and never stored as edges.
    """

    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.p) < 1:
            raise InvalidSize(f"pattern needs at least one vertex, got p={self.p}")
        normalized = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop ({i}, {i}) is not a valid edge")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) out of range for p={self.p}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def complete(cls, p):
        return cls(p, frozenset(itertools.combinations(range(p), 2)))

    @classmethod
    def empty(cls, p):
        return cls(p, frozenset())

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, v):
        return {j if i == v else i for i, j in self.edges if v in (i, j)}

    @cached_property
    def _adjacency(self):
        A = np.zeros((self.p, self.p), dtype=bool)
        if self.edges:
            i, j = np.array(sorted(self.edges)).T
            A[i, j] = A[j, i] = True
        A.flags.writeable = False
        return A

    @cached_property
    def _later(self):
        A = self._adjacency
        return tuple(np.flatnonzero(A[j, j + 1:]) + j + 1 for j in range(self.p))

    def adjacency(self):
        return self._adjacency.copy()

    def mask(self):
        """Boolean ``p x p`` support mask including the diagonal."""
        return self._adjacency | np.eye(self.p, dtype=bool)

    def lower_mask(self):
        """Support of a G-sparse lower-triangular factor (diagonal included)."""
        return np.tril(self.mask())

    def later_neighbors(self):
        """For each column ``j``, the sorted neighbors ``k > j``."""
        return list(self._later)

    def complement_edges(self):
        return frozenset(itertools.combinations(range(self.p), 2)) - self.edges

    def to_json_dict(self):
        return {"p": self.p, "edges": [[i + 1, j + 1] for i, j in sorted(self.edges)]}

    @classmethod
    def from_json_dict(cls, obj):
        if set(obj) != {"p", "edges"}:
            raise ValueError(f"pattern JSON must have exactly keys p and edges, got {sorted(obj)}")
        p = int(obj["p"])
        edges = []
        for e in obj["edges"]:
            if len(e) != 2:
                raise ValueError(f"edge {e!r} must have two endpoints")
            i, j = int(e[0]), int(e[1])
            if not (1 <= i <= p and 1 <= j <= p):
                raise ValueError(f"edge {e!r} out of range 1..{p}")
            edges.append((i - 1, j - 1))
        return cls(p, frozenset(edges))

    def dumps(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text):
        return cls.from_json_dict(json.loads(text))


@lru_cache(maxsize=256)
def banded_pattern(p, d):
    """Band of width ``d``: ``(i, j)`` is an edge iff ``0 < |i - j| < d``.

    ``d = 1`` is the diagonal pattern and ``d = p`` the complete graph.
    """
    if not 1 <= d <= p:
        raise InvalidBandwidth(f"band width must satisfy 1 <= d <= p, got d={d}, p={p}")
    return SparsityPattern(p, frozenset(
        (i, j) for i in range(p) for j in range(i + 1, min(p, i + d))))


def grid_pattern(rows, cols):
    """Two-dimensional lattice, vertices numbered row-major."""
    if rows < 2 or cols < 2:
        raise InvalidSize(f"grid needs rows, cols >= 2, got {rows}x{cols}")
    edges = set()
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.add((v, v + 1))
            if r + 1 < rows:
                edges.add((v, v + cols))
    return SparsityPattern(rows * cols, frozenset(edges))


def _check_order(order, p):
    order = [int(v) for v in order]
    if sorted(order) != list(range(p)):
        raise InvalidPermutation(f"{order} is not a permutation of 0..{p - 1}")
    return order


def is_perfect_elimination_order(G, order):
    """True iff every vertex's later neighbors in ``order`` form a clique."""
    return _is_peo(G, tuple(_check_order(order, G.p)))


@lru_cache(maxsize=1024)
def _is_peo(G, order):
    A = G.mask()
    position = np.empty(G.p, dtype=int)
    position[list(order)] = np.arange(G.p)
    for v in order:
        later = np.flatnonzero(A[v] & (position > position[v]))
        if later.size > 1 and not A[np.ix_(later, later)].all():
            return False
    return True


def maximum_cardinality_search(G):
    """Visit order of maximum cardinality search, ties to the lowest index.

    The reverse of the visit order is a perfect elimination order exactly
    when ``G`` is chordal.
    """
    A = G.adjacency()
    weight = np.zeros(G.p, dtype=int)
    visited = np.zeros(G.p, dtype=bool)
    visit = []
    for _ in range(G.p):
        masked = np.where(visited, -1, weight)
        v = int(np.argmax(masked))  # argmax returns the first maximum
        visit.append(v)
        visited[v] = True
        weight[A[v] & ~visited] += 1
    return visit


def find_perfect_elimination_order(G):
    """A verified perfect elimination order of ``G``, or ``None`` if not chordal.

    The natural order is returned whenever it is already perfect; otherwise
    the candidate comes from maximum cardinality search. Either way the
    candidate is checked explicitly before being returned.
    """
    order = _find_peo(G)
    return None if order is None else list(order)


@lru_cache(maxsize=1024)
def _find_peo(G):
    natural = tuple(range(G.p))
    if _is_peo(G, natural):
        return natural
    candidate = tuple(maximum_cardinality_search(G)[::-1])
    if _is_peo(G, candidate):
        return candidate
    return None


def is_chordal(G):
    return find_perfect_elimination_order(G) is not None


def require_perfect_order(G):
    order = find_perfect_elimination_order(G)
    if order is None:
        raise NonChordalPattern("sparsity pattern is not chordal")
    return order


def is_g_sparse(M, G, tol=G_SPARSE_TOL):
    """True iff ``|M[i, j]| <= tol`` for every off-diagonal ``(i, j)`` not in ``G``."""
    M = np.asarray(M, dtype=float)
    if M.shape != (G.p, G.p):
        raise DimensionMismatch(f"matrix shape {M.shape} does not match p={G.p}")
    off = ~G.mask()
    return bool(np.all(np.abs(M[off]) <= tol))


def permute_pattern(G, order):
    """Relabel vertices so that ``order`` becomes the natural order.

    Vertex ``order[k]`` of ``G`` becomes vertex ``k`` of the result, matching
    ``M[np.ix_(order, order)]`` on matrices.
    """
    order = _check_order(order, G.p)
    position = {v: k for k, v in enumerate(order)}
    return SparsityPattern(G.p, frozenset(
        (position[i], position[j]) for i, j in G.edges))


def inverse_permutation(order):
    order = np.asarray(order, dtype=int)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return inv.tolist()
