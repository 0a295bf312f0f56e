"""Network topologies, mixing matrices, and communication-matrix sets.

Nodes are labeled ``0..n-1``. A mixing matrix is a symmetric, doubly
stochastic matrix with a positive diagonal whose off-diagonal support lies on
the edges of the underlying graph. Its connectivity is summarized by
``beta = ||W - (1/n) 11^T||_2``, which is strictly below one exactly when the
graph is connected. All matrices are dense; the intended scale is a few
hundred nodes at most.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

VALIDATION_TOL = 1e-12

TOPOLOGY_KINDS = ("complete", "star", "line")
METHOD_TAGS = ("RGTA-1", "RGTA-2", "RGTA-3", "custom")

# Communication-matrix slots per method: (x-mix, descent-mix, tracker-mix,
# gradient-correction-mix). True means "use W", False means identity.
_METHOD_SLOTS = {
    "RGTA-1": (True, False, True, False),
    "RGTA-2": (True, True, True, False),
    "RGTA-3": (True, True, True, True),
}


def _normalized_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph on nodes 0..n-1."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError(f"node count must be positive, got {self.n}")
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{i}) not allowed")
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i},{j}) out of range or not normalized")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        adj = self.adjacency()
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(adj[u]):
                if not seen[v]:
                    seen[v] = True
                    queue.append(int(v))
        return bool(seen.all())


def build_topology(kind: str, n: int) -> Topology:
    """Construct one of the built-in topologies.

    ``complete`` connects all pairs (n >= 1), ``star`` connects every node to
    hub node 0, and ``line`` chains nodes 0-1-...-(n-1); the latter two
    require n >= 2.
    """
    if n <= 0:
        raise ValueError(f"node count must be positive, got {n}")
    if kind == "complete":
        edges = frozenset((i, j) for i in range(n) for j in range(i + 1, n))
    elif kind == "star":
        if n < 2:
            raise ValueError("star topology requires n >= 2")
        edges = frozenset((0, j) for j in range(1, n))
    elif kind == "line":
        if n < 2:
            raise ValueError("line topology requires n >= 2")
        edges = frozenset((i, i + 1) for i in range(n - 1))
    else:
        raise ValueError(f"unknown topology kind {kind!r}; expected one of {TOPOLOGY_KINDS}")
    return Topology(n=n, edges=edges)


def beta_of(w: np.ndarray) -> float:
    """Spectral norm of ``W - (1/n) 11^T``, the connectivity parameter."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {w.shape}")
    n = w.shape[0]
    deviation = w - np.full((n, n), 1.0 / n)
    return float(np.linalg.svd(deviation, compute_uv=False)[0])


def _validate_doubly_stochastic(w: np.ndarray, topology: Topology | None = None) -> None:
    n = w.shape[0]
    if not np.allclose(w, w.T, rtol=0.0, atol=VALIDATION_TOL):
        raise ValueError("matrix is not symmetric")
    ones = np.ones(n)
    if not np.allclose(w @ ones, ones, rtol=0.0, atol=VALIDATION_TOL):
        raise ValueError("row sums differ from 1")
    if not np.allclose(ones @ w, ones, rtol=0.0, atol=VALIDATION_TOL):
        raise ValueError("column sums differ from 1")
    if np.any(w < -VALIDATION_TOL):
        raise ValueError("matrix has negative entries")
    if np.any(np.diag(w) <= 0.0):
        raise ValueError("diagonal entries must be strictly positive")
    if topology is not None:
        if topology.n != n:
            raise ValueError(f"matrix size {n} does not match topology size {topology.n}")
        allowed = topology.adjacency()
        np.fill_diagonal(allowed, True)
        if np.any((np.abs(w) > VALIDATION_TOL) & ~allowed):
            raise ValueError("matrix has weight on a non-edge")


@dataclass(frozen=True)
class MixingMatrix:
    """Validated communication matrix together with its connectivity value."""

    w: np.ndarray
    beta: float
    is_identity: bool = field(default=False, compare=False)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @classmethod
    def from_matrix(cls, w: np.ndarray, topology: Topology | None = None) -> "MixingMatrix":
        w = np.asarray(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {w.shape}")
        _validate_doubly_stochastic(w, topology)
        identity = bool(np.array_equal(w, np.eye(w.shape[0])))
        return cls(w=w, beta=beta_of(w), is_identity=identity)

    @classmethod
    def identity(cls, n: int) -> "MixingMatrix":
        if n <= 0:
            raise ValueError(f"node count must be positive, got {n}")
        return cls(w=np.eye(n), beta=0.0 if n == 1 else 1.0, is_identity=True)


def mixing_matrix(topology: Topology, scheme: str = "metropolis") -> MixingMatrix:
    """Build a mixing matrix for a connected topology.

    ``metropolis`` uses w_ij = 1 / (1 + max(deg_i, deg_j)) on edges with the
    diagonal absorbing the remainder. ``equal_complete`` is the rank-one
    averaging matrix (1/n) 11^T and is only valid on the complete graph.
    """
    if not topology.is_connected():
        raise ValueError("mixing matrix requires a connected topology")
    n = topology.n
    if scheme == "equal_complete":
        if not topology.is_complete():
            raise ValueError("equal_complete weights are only valid on the complete graph")
        w = np.full((n, n), 1.0 / n)
    elif scheme == "metropolis":
        deg = topology.degrees()
        w = np.zeros((n, n))
        for i, j in topology.edges:
            w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
        np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    _validate_doubly_stochastic(w, topology)
    return MixingMatrix(w=w, beta=beta_of(w), is_identity=bool(n == 1 and scheme == "metropolis"))


def consensus_apply(w: MixingMatrix, x: np.ndarray, reps: int = 1) -> np.ndarray:
    """Apply ``reps`` neighbor-averaging rounds, returning ``W^reps @ x``.

    Realized as sequential multiplications so it matches message passing
    round for round. Column means are preserved by double stochasticity.
    """
    if reps <= 0:
        raise ValueError(f"reps must be positive, got {reps}")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != w.n:
        raise ValueError(f"state has {x.shape[0]} rows but matrix is {w.n}x{w.n}")
    if w.is_identity:
        return x.copy()
    out = x
    for _ in range(reps):
        out = w.w @ out
    return out


@dataclass(frozen=True)
class CommunicationSet:
    """The four communication matrices of one randomized tracking instance."""

    w1: MixingMatrix
    w2: MixingMatrix
    w3: MixingMatrix
    w4: MixingMatrix
    n_c: int
    method_tag: str = "custom"

    def __post_init__(self) -> None:
        if self.n_c < 1:
            raise ValueError(f"n_c must be a positive integer, got {self.n_c}")
        if self.method_tag not in METHOD_TAGS:
            raise ValueError(f"unknown method tag {self.method_tag!r}")
        sizes = {m.n for m in (self.w1, self.w2, self.w3, self.w4)}
        if len(sizes) != 1:
            raise ValueError(f"communication matrices disagree on size: {sorted(sizes)}")

    @property
    def n(self) -> int:
        return self.w1.n

    @property
    def matrices(self) -> tuple[MixingMatrix, MixingMatrix, MixingMatrix, MixingMatrix]:
        return (self.w1, self.w2, self.w3, self.w4)


def communication_set(method_tag: str, w: MixingMatrix, n_c: int) -> CommunicationSet:
    """Place ``w`` or the identity in the four slots of a named method."""
    if method_tag not in _METHOD_SLOTS:
        raise ValueError(
            f"unknown method tag {method_tag!r}; expected one of {sorted(_METHOD_SLOTS)}"
        )
    eye = MixingMatrix.identity(w.n)
    slots = tuple(w if use_w else eye for use_w in _METHOD_SLOTS[method_tag])
    return CommunicationSet(*slots, n_c=n_c, method_tag=method_tag)
