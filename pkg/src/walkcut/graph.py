"""Similarity graphs over walk rows: cuts, normalised cuts and stopping stats.

The vertex set is the patch grid; edge weights come from pairwise
similarity of walk rows.  Throughout, the edge count ``m`` and total edge
weight ``T`` range over unordered pairs ``i < j`` (self-loops excluded),
while vertex degrees are full row sums (self-loops included) since those
are what the spectral relaxation divides by.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MINCUT_MAX_N = 512


class DegeneratePartitionError(ValueError):
    """A bipartition side has zero association with the graph."""


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Dense symmetric non-negative weight matrix."""

    a: np.ndarray
    self_loops_included: bool = True


@dataclass(frozen=True)
class Bipartition:
    """Two disjoint non-empty index sets covering a graph's vertices."""

    side_a: np.ndarray
    side_b: np.ndarray

    @staticmethod
    def from_mask(mask: np.ndarray) -> "Bipartition":
        mask = np.asarray(mask, dtype=bool)
        return Bipartition(np.flatnonzero(mask), np.flatnonzero(~mask))


@dataclass(frozen=True)
class GraphStats:
    """Vertex count, positive-edge count, total edge weight and degrees."""

    n: int
    m: int
    total_weight: float
    degrees: np.ndarray = field(repr=False)


def build_adjacency(p: np.ndarray, similarity: str = "dot") -> AdjacencyMatrix:
    """Pairwise similarity of walk rows as a dense graph.

    Parameters
    ----------
    p : ndarray
        ``(n, d)`` non-negative rows (square in normal use).
    similarity : {"dot", "cosine"}
        ``dot`` gives ``A = P P^T``; ``cosine`` scales rows to unit norm
        first, which puts a unit diagonal on the result.

    Returns
    -------
    AdjacencyMatrix
        Exactly symmetric, non-negative, self-loops included.
    """
    if p.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {p.shape}")
    rows = np.asarray(p, dtype=np.float64)
    if similarity == "dot":
        a = rows @ rows.T
    elif similarity == "cosine":
        norms = np.linalg.norm(rows, axis=1)
        if (norms <= 0).any():
            raise ValueError("cosine similarity undefined for zero rows")
        unit = rows / norms[:, None]
        a = unit @ unit.T
        np.fill_diagonal(a, 1.0)
    else:
        raise ValueError(f"unknown similarity {similarity!r}")
    # BLAS does not guarantee bit-symmetric products
    a = (a + a.T) * 0.5
    np.maximum(a, 0.0, out=a)
    return AdjacencyMatrix(a=a, self_loops_included=True)


def graph_stats(adj) -> GraphStats:
    """Stats of the positive-weight graph: ``n``, ``m``, ``T``, degrees."""
    a = _weights(adj)
    n = a.shape[0]
    upper = np.triu(a, k=1)
    m = int(np.count_nonzero(upper > 0))
    total = float(upper.sum())
    return GraphStats(n=n, m=m, total_weight=total, degrees=a.sum(axis=1))


def cut_cost(adj, part: Bipartition) -> float:
    """Total weight crossing the bipartition."""
    a = _weights(adj)
    _check_partition(a.shape[0], part)
    return float(a[np.ix_(part.side_a, part.side_b)].sum())


def ncut_cost(adj, part: Bipartition) -> float:
    """Normalised cut value of a bipartition, in ``[0, 2]``.

    ``cut(A,B)/assoc(A,V) + cut(A,B)/assoc(B,V)`` where ``assoc(S,V)`` is
    the total weight from ``S`` to every vertex (self-loops included).
    A side with zero association raises :class:`DegeneratePartitionError`.
    """
    a = _weights(adj)
    _check_partition(a.shape[0], part)
    degrees = a.sum(axis=1)
    assoc_a = float(degrees[part.side_a].sum())
    assoc_b = float(degrees[part.side_b].sum())
    if assoc_a <= 0 or assoc_b <= 0:
        raise DegeneratePartitionError("bipartition side with zero association")
    cut = float(a[np.ix_(part.side_a, part.side_b)].sum())
    return cut / assoc_a + cut / assoc_b


def manc_threshold(stats: GraphStats) -> float:
    """Automatic stopping threshold ``n * T / (2 m)``.

    For a complete graph ``m = n (n - 1) / 2`` and the value reduces to
    ``T / (n - 1)``.  Undefined on edgeless graphs.
    """
    if stats.m == 0:
        raise ValueError("threshold undefined for an edgeless graph")
    return stats.n * stats.total_weight / (2.0 * stats.m)


def min_cut(adj, mode: str = "proxy", proxy_cut: float | None = None) -> float:
    """Global minimum cut weight, exact or proxied.

    ``exact`` runs Stoer-Wagner (dense, O(n^3)) and is guarded to
    ``n <= MINCUT_MAX_N``; ``proxy`` simply returns ``proxy_cut``, the
    caller's candidate cut value, which keeps large runs cheap.
    """
    if mode == "proxy":
        if proxy_cut is None:
            raise ValueError("proxy mode requires proxy_cut")
        return float(proxy_cut)
    if mode != "exact":
        raise ValueError(f"unknown min-cut mode {mode!r}")
    a = _weights(adj)
    n = a.shape[0]
    if n > MINCUT_MAX_N:
        raise ValueError(f"exact min-cut limited to n <= {MINCUT_MAX_N}, got {n}")
    if n < 2:
        raise ValueError("min-cut needs at least two vertices")
    return _stoer_wagner(a)


def _stoer_wagner(a: np.ndarray) -> float:
    # Dense Stoer-Wagner: repeat a maximum-adjacency sweep, record the
    # cut-of-the-phase isolating its last vertex, merge the last two.
    w = np.array(a, dtype=np.float64)
    np.fill_diagonal(w, 0.0)
    active = list(range(w.shape[0]))
    best = np.inf
    while len(active) > 1:
        sub = w[np.ix_(active, active)]
        m = len(active)
        conn = sub[0].copy()
        conn[0] = -np.inf
        order = [0]
        cut_of_phase = 0.0
        for _ in range(m - 1):
            j = int(np.argmax(conn))
            cut_of_phase = conn[j]
            order.append(j)
            conn[j] = -np.inf
            conn += sub[j]  # -inf entries stay -inf
        best = min(best, cut_of_phase)
        s, t = active[order[-2]], active[order[-1]]
        w[s, :] += w[t, :]
        w[:, s] += w[:, t]
        w[s, s] = 0.0
        active.remove(t)
    return float(best)


def _weights(adj) -> np.ndarray:
    a = adj.a if isinstance(adj, AdjacencyMatrix) else np.asarray(adj)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got {a.shape}")
    return a


def _check_partition(n: int, part: Bipartition) -> None:
    sa = np.asarray(part.side_a)
    sb = np.asarray(part.side_b)
    if sa.size == 0 or sb.size == 0:
        raise ValueError("bipartition sides must be non-empty")
    joined = np.concatenate([sa, sb])
    if joined.size != n or np.unique(joined).size != n or joined.min() < 0 or joined.max() >= n:
        raise ValueError("bipartition must split the vertex set exactly")
