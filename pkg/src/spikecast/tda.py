"""Sliding-window point clouds, Vietoris-Rips persistence (H0/H1) and
Wasserstein distances between persistence diagrams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist


@dataclass
class PersistenceDiagram:
    """Birth/death pairs keyed by homology dimension; essential deaths are ``inf``."""

    pairs: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for dim, arr in self.pairs.items():
            arr = np.asarray(arr, dtype=float).reshape(-1, 2)
            if np.any(arr[:, 1] < arr[:, 0]):
                raise ValueError("death must be >= birth")
            clean[int(dim)] = arr
        self.pairs = clean

    def __getitem__(self, dim: int) -> np.ndarray:
        return self.pairs.get(dim, np.zeros((0, 2)))

    def finite(self, dim: int) -> np.ndarray:
        arr = self[dim]
        return arr[np.isfinite(arr[:, 1])]

    def essential(self, dim: int) -> np.ndarray:
        arr = self[dim]
        return arr[~np.isfinite(arr[:, 1])]

    def rows(self):
        for dim in sorted(self.pairs):
            for b, d in self.pairs[dim]:
                yield dim, float(b), float(d)


@dataclass(frozen=True)
class TdaConfig:
    window: int = 30
    embed_dim: int = 3
    delay: int = 2
    q: float = 1.0
    dim: int = 1
    fallback_dim: int = 0
    include_essential: bool = False

    def __post_init__(self):
        if self.window < self.embed_dim * self.delay:
            raise ValueError("window must be >= embed_dim * delay")
        if self.q < 1:
            raise ValueError("q must be >= 1")


def sliding_window_cloud(series, window: int, embed_dim: int = 3, delay: int = 2) -> np.ndarray:
    """Delay vectors ``(x(t), x(t - delay), ...)`` inside the trailing window."""
    values = np.asarray(getattr(series, "values", series), dtype=float)
    if embed_dim < 1 or delay < 1:
        raise ValueError("embed_dim and delay must be >= 1")
    if window < embed_dim * delay and embed_dim > 1:
        raise ValueError("window must be >= embed_dim * delay")
    if values.shape[0] < window:
        raise ValueError(f"series of length {values.shape[0]} is shorter than window {window}")
    w = values[values.shape[0] - window :]
    span = (embed_dim - 1) * delay
    count = window - span
    cols = [w[span - k * delay : span - k * delay + count] for k in range(embed_dim)]
    return np.stack(cols, axis=1)


def enclosing_radius(dist: np.ndarray) -> float:
    if dist.shape[0] == 0:
        return 0.0
    return float(dist.max(axis=1).min())


def _find(parent: list[int], i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def rips_persistence(cloud, max_scale: float | None = None) -> PersistenceDiagram:
    """H0 and H1 of the Rips filtration over GF(2), truncated at ``max_scale``.

    ``max_scale`` defaults to the enclosing radius, beyond which the complex
    is a cone, so H1 is exact. Zero-length bars are dropped.
    """
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    dist = cdist(pts, pts, metric="euclidean")
    if max_scale is None:
        max_scale = enclosing_radius(dist)

    iu, ju = np.triu_indices(n, k=1)
    elen = dist[iu, ju]
    keep = elen <= max_scale
    iu, ju, elen = iu[keep], ju[keep], elen[keep]
    order = np.lexsort((ju, iu, elen))
    iu, ju, elen = iu[order], ju[order], elen[order]
    m = elen.shape[0]

    parent = list(range(n))
    h0 = []
    positive = np.ones(m, dtype=bool)
    for e in range(m):
        a, b = _find(parent, int(iu[e])), _find(parent, int(ju[e]))
        if a == b:
            continue
        parent[max(a, b)] = min(a, b)
        positive[e] = False
        if elen[e] > 0:
            h0.append((0.0, float(elen[e])))
    roots = {_find(parent, i) for i in range(n)}
    h0.extend((0.0, math.inf) for _ in roots)

    h1 = []
    if n >= 3 and m >= 3:
        eidx = np.full((n, n), -1, dtype=np.int64)
        eidx[iu, ju] = np.arange(m)
        eidx[ju, iu] = np.arange(m)
        i, j, k = _triangles(n)
        e_ij, e_ik, e_jk = eidx[i, j], eidx[i, k], eidx[j, k]
        ok = (e_ij >= 0) & (e_ik >= 0) & (e_jk >= 0)
        e_ij, e_ik, e_jk = e_ij[ok], e_ik[ok], e_jk[ok]
        emax = np.maximum(np.maximum(e_ij, e_ik), e_jk)
        emid = e_ij + e_ik + e_jk - emax - np.minimum(np.minimum(e_ij, e_ik), e_jk)
        tri_order = np.lexsort((emid, emax))
        pivots: dict[int, int] = {}
        for t in tri_order:
            col = (1 << int(e_ij[t])) | (1 << int(e_ik[t])) | (1 << int(e_jk[t]))
            low = int(emax[t])
            while low in pivots:
                col ^= pivots[low]
                if not col:
                    break
                low = col.bit_length() - 1
            if col:
                pivots[low] = col
                birth = float(elen[low])
                death = float(elen[emax[t]])
                if death > birth:
                    h1.append((birth, death))
        for e in np.flatnonzero(positive):
            if int(e) not in pivots:
                h1.append((float(elen[e]), math.inf))
    return PersistenceDiagram({0: np.array(h0).reshape(-1, 2), 1: np.array(h1).reshape(-1, 2)})


_TRI_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _triangles(n: int):
    if n not in _TRI_CACHE:
        a, b, c = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        sel = (a < b) & (b < c)
        _TRI_CACHE[n] = (a[sel], b[sel], c[sel])
    return _TRI_CACHE[n]


def _diag_cost(arr: np.ndarray) -> np.ndarray:
    return (arr[:, 1] - arr[:, 0]) / 2.0


def wasserstein(X: PersistenceDiagram, Y: PersistenceDiagram, q: float = 1.0, dim: int = 1, include_essential: bool = False) -> float:
    """q-Wasserstein distance with L-infinity ground metric.

    Each point is matched to a point of the other diagram or to its own
    diagonal projection; solved as an assignment on the augmented
    (m + n) x (m + n) cost matrix.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    A, B = X.finite(dim), Y.finite(dim)
    total = _matching_cost(A, B, q)
    if include_essential:
        ea = np.sort(X.essential(dim)[:, 0])
        eb = np.sort(Y.essential(dim)[:, 0])
        if ea.shape != eb.shape:
            return math.inf
        total += float(np.sum(np.abs(ea - eb) ** q))
    return total ** (1.0 / q)


def _matching_cost(A: np.ndarray, B: np.ndarray, q: float) -> float:
    m, n = A.shape[0], B.shape[0]
    if m == 0 and n == 0:
        return 0.0
    if m == 0:
        return float(np.sum(_diag_cost(B) ** q))
    if n == 0:
        return float(np.sum(_diag_cost(A) ** q))
    pair = cdist(A, B, metric="chebyshev") ** q
    da = _diag_cost(A) ** q
    db = _diag_cost(B) ** q
    big = float(pair.sum() + da.sum() + db.sum() + 1.0)
    cost = np.zeros((m + n, m + n))
    cost[:m, :n] = pair
    cost[:m, n:] = big
    cost[np.arange(m), n + np.arange(m)] = da
    cost[m:, :n] = big
    cost[m + np.arange(n), np.arange(n)] = db
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def window_diagram(values, cfg: TdaConfig) -> PersistenceDiagram:
    cloud = sliding_window_cloud(values, cfg.window, cfg.embed_dim, cfg.delay)
    return rips_persistence(cloud)


def diagram_distance(a: PersistenceDiagram, b: PersistenceDiagram, cfg: TdaConfig) -> float:
    """Distance in ``cfg.dim``; falls back to ``cfg.fallback_dim`` when both are empty there."""
    dim = cfg.dim
    if a.finite(dim).shape[0] == 0 and b.finite(dim).shape[0] == 0:
        dim = cfg.fallback_dim
    return wasserstein(a, b, cfg.q, dim, cfg.include_essential)


def rolling_wasserstein(observed, predicted, window: int = 30, cfg: TdaConfig | None = None) -> float:
    cfg = cfg or TdaConfig(window=window)
    if cfg.window != window:
        cfg = TdaConfig(window, cfg.embed_dim, cfg.delay, cfg.q, cfg.dim, cfg.fallback_dim, cfg.include_essential)
    obs = np.asarray(getattr(observed, "values", observed), dtype=float)
    pred = np.asarray(getattr(predicted, "values", predicted), dtype=float)
    if obs.shape[0] < window or pred.shape[0] < window:
        raise ValueError("both series must be at least one window long")
    return diagram_distance(window_diagram(obs, cfg), window_diagram(pred, cfg), cfg)
