"""Betweenness centrality on the synapse digraph and top-k neuron selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXACT_LIMIT = 2000


@dataclass
class CentralityResult:
    scores: np.ndarray
    method: str = "exact"
    sources: int | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if np.any(self.scores < 0):
            raise ValueError("betweenness scores must be non-negative")


def _as_adjacency(graph) -> np.ndarray:
    if hasattr(graph, "adjacency"):
        graph = graph.adjacency()
    adj = np.asarray(graph, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be square")
    return adj


def _accumulate(adj_f: np.ndarray, source: int) -> np.ndarray:
    """Dependencies of every node on ``source`` (Brandes, level-synchronous BFS).

    BFS levels are expanded with matrix products; the dependency sweep walks
    the levels backwards, since shortest-path DAG edges only join
    consecutive levels.
    """
    n = adj_f.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n)
    dist[source] = 0
    sigma[source] = 1.0
    levels = [np.array([source])]
    frontier = np.zeros(n)
    frontier[source] = 1.0
    d = 0
    while True:
        reach = frontier @ adj_f
        new = (reach > 0) & (dist < 0)
        if not new.any():
            break
        d += 1
        dist[new] = d
        sigma[new] = reach[new]
        idx = np.flatnonzero(new)
        levels.append(idx)
        frontier = np.zeros(n)
        frontier[idx] = sigma[idx]
    delta = np.zeros(n)
    for lev in range(len(levels) - 1, 0, -1):
        below = levels[lev]
        above = levels[lev - 1]
        coeff = (1.0 + delta[below]) / sigma[below]
        delta[above] = sigma[above] * (adj_f[np.ix_(above, below)] @ coeff)
    delta[source] = 0.0
    return delta


def betweenness(graph, method: str = "auto", sources: int | None = None, seed: int = 0) -> CentralityResult:
    """Betweenness over ordered pairs of distinct nodes, endpoints excluded.

    ``method`` is ``"exact"``, ``"sampled"`` or ``"auto"`` (exact up to
    ``EXACT_LIMIT`` nodes). Sampled mode accumulates from a uniform source
    subset and rescales by ``n / sources``. Edge weights are ignored.
    """
    adj = _as_adjacency(graph)
    n = adj.shape[0]
    if n < 3:
        raise ValueError("betweenness needs at least 3 nodes")
    if method == "auto":
        method = "exact" if n <= EXACT_LIMIT else "sampled"
    adj_f = adj.astype(float)
    np.fill_diagonal(adj_f, 0.0)
    if method == "exact":
        picked = np.arange(n)
        scale = 1.0
    elif method == "sampled":
        if sources is None:
            sources = max(1, min(n, int(np.ceil(np.sqrt(n) * 8))))
        if not 1 <= sources <= n:
            raise ValueError("sources must lie in [1, n]")
        picked = np.random.default_rng(seed).choice(n, size=sources, replace=False)
        scale = n / sources
    else:
        raise ValueError(f"unknown method {method!r}")
    scores = np.zeros(n)
    for s in picked:
        scores += _accumulate(adj_f, int(s))
    scores *= scale
    np.maximum(scores, 0.0, out=scores)
    return CentralityResult(scores, method=method, sources=None if method == "exact" else len(picked))


def top_k(result, k: int, candidates=None) -> list[int]:
    """Highest-scoring ``k`` ids, ties by ascending id, sorted by (-score, id)."""
    scores = np.asarray(getattr(result, "scores", result), dtype=float)
    ids = np.arange(scores.shape[0]) if candidates is None else np.asarray(list(candidates))
    if not 1 <= k <= ids.size:
        raise ValueError(f"k={k} out of range [1, {ids.size}]")
    order = np.lexsort((ids, -scores[ids]))
    return [int(i) for i in ids[order[:k]]]


def default_k(n_neurons: int) -> int:
    return max(10, n_neurons // 50)
