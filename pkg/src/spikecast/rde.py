"""Randomly distributed embedding: an ensemble of k-NN weak predictors, each
reading a random low-dimensional subset of the observation channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class DelayEmbedding:
    E: int
    delay: int
    vectors: np.ndarray
    times: np.ndarray


def delay_embed(series, E: int, delay: int = 1) -> DelayEmbedding:
    """Vectors ``(x(t), x(t - delay), ..., x(t - (E - 1) * delay))``."""
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if E < 1 or delay < 1:
        raise ValueError("E and delay must be >= 1")
    span = (E - 1) * delay
    if x.shape[0] < span + 1:
        raise ValueError(f"series of length {x.shape[0]} too short for E={E}, delay={delay}")
    times = np.arange(span, x.shape[0])
    vectors = np.stack([x[times - k * delay] for k in range(E)], axis=1)
    return DelayEmbedding(E, delay, vectors, times)


@dataclass(frozen=True)
class RdeConfig:
    s: int = 3
    M: int = 100
    E: int = 3
    delay: int = 2
    k_nn: int = 4
    horizon: int = 1
    trim: float = 0.1
    eps_w: float = 1e-3
    standardize: bool = True

    def __post_init__(self):
        if min(self.s, self.M, self.E, self.delay, self.k_nn, self.horizon) < 1:
            raise ValueError("RDE sizes must be >= 1")
        if not 0 <= self.trim < 0.5:
            raise ValueError("trim must lie in [0, 0.5)")


@dataclass
class WeakPredictor:
    channels: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    fit_error: float


@dataclass
class ReconstructionModel:
    predictors: list[WeakPredictor]
    cfg: RdeConfig
    center: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: np.ndarray = field(default_factory=lambda: np.ones(0))

    def __post_init__(self):
        if not self.predictors:
            raise ValueError("model needs at least one predictor")
        self._stack()

    def _stack(self):
        self._X = np.stack([p.X for p in self.predictors])
        self._Y = np.stack([p.Y for p in self.predictors])
        self._ch = np.stack([p.channels for p in self.predictors])
        self._err = np.array([p.fit_error for p in self.predictors])

    @property
    def horizon(self) -> int:
        return self.cfg.horizon

    def summary(self) -> dict:
        return {
            "horizon": self.cfg.horizon,
            "k_nn": self.cfg.k_nn,
            "predictors": [
                {"channels": [int(c) for c in p.channels], "fit_error": float(p.fit_error)}
                for p in self.predictors
            ],
        }


def _idw(dk: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Inverse-distance weights over neighbour distances ``dk`` (..., k).

    When some neighbours coincide with the query only those are averaged.
    """
    exact = dk <= 1e-12
    w = np.where(exact.any(axis=-1, keepdims=True), exact.astype(float), 1.0 / np.maximum(dk, 1e-300))
    w /= w.sum(axis=-1, keepdims=True)
    return np.einsum("...k,...kh->...h", w, targets)


def _knn_votes(X: np.ndarray, Y: np.ndarray, d2: np.ndarray, k: int) -> np.ndarray:
    """Inverse-distance weighted k-NN from squared distances of shape (..., N).

    Equal distances are broken by the lower training index.
    """
    k = min(k, d2.shape[-1])
    idx = np.argpartition(d2, k - 1, axis=-1)[..., :k]
    sel = np.take_along_axis(d2, idx, axis=-1)
    # a tie at the k-th distance makes the partition arbitrary; sort those rows
    tied = (d2 <= sel.max(axis=-1, keepdims=True)).sum(axis=-1) > k
    if tied.any():
        idx[tied] = np.argsort(d2[tied], axis=-1, kind="stable")[..., :k]
    idx = np.sort(idx, axis=-1)
    dk = np.sqrt(np.take_along_axis(d2, idx, axis=-1))
    targets = np.take_along_axis(Y, idx[..., None], axis=-2) if Y.ndim == d2.ndim + 1 else Y[idx]
    return _idw(dk, targets)


def _loo_votes(X: np.ndarray, Y: np.ndarray, k: int) -> np.ndarray:
    """Leave-one-out k-NN votes for every training row.

    Candidates come from a k-d tree with a few spare neighbours and are
    ordered by (distance, index), matching :func:`_knn_votes`. Rows whose
    candidate list may have cut a tie are recomputed by brute force.
    """
    n = X.shape[0]
    k = min(k, n - 1)
    q = min(n, k + 1 + 4)
    dist, idx = cKDTree(X).query(X, k=q)
    dist, idx = dist.reshape(n, q), idx.reshape(n, q)
    order = np.lexsort((idx, dist), axis=-1)
    dist = np.take_along_axis(dist, order, axis=-1)
    idx = np.take_along_axis(idx, order, axis=-1)
    own = idx == np.arange(n)[:, None]
    pick = np.argsort(own, axis=-1, kind="stable")[:, :k]
    dk = np.take_along_axis(dist, pick, axis=-1)
    nb = np.take_along_axis(idx, pick, axis=-1)
    votes = _idw(dk, Y[nb])
    unsafe = np.flatnonzero((dk[:, -1] >= dist[:, -1]) & (q < n)) if q < n else np.array([], dtype=int)
    for i in unsafe:
        d2 = np.sum((X - X[i]) ** 2, axis=1)
        d2[i] = np.inf
        votes[i] = _knn_votes(X, Y, d2, k)
    return votes


def _pairs(obs: np.ndarray, target: np.ndarray, horizon: int):
    """Training pairs: observation row t -> target[t + 1 : t + 1 + horizon]."""
    n = obs.shape[0] - horizon
    X = obs[:n]
    Y = np.stack([target[h + 1 : h + 1 + n] for h in range(horizon)], axis=1)
    return X, Y


def fit(observations, target, cfg: RdeConfig | None = None, seed: int = 0, subsets=None) -> ReconstructionModel:
    """Fit the ensemble.

    ``observations`` has shape (T, K); ``target`` has length T. Each weak
    predictor maps the channel subset at time t to ``target[t+1 .. t+horizon]``
    and is scored by its leave-one-out RMSE on the first horizon step.
    ``subsets`` overrides the random channel draws.
    """
    cfg = cfg or RdeConfig()
    obs = np.asarray(observations, dtype=float)
    if obs.ndim == 1:
        obs = obs[:, None]
    y = np.asarray(getattr(target, "values", target), dtype=float)
    T, K = obs.shape
    if y.shape[0] != T:
        raise ValueError("observations and target must be aligned")
    if T - cfg.horizon < cfg.k_nn + 1:
        raise ValueError("insufficient data for the requested k_nn and horizon")
    if subsets is None:
        if K < cfg.s:
            raise ValueError(f"need at least s={cfg.s} channels, got {K}")
        rng = np.random.default_rng(seed)
        subsets = [np.sort(rng.choice(K, size=cfg.s, replace=False)) for _ in range(cfg.M)]
    subsets = [np.asarray(s, dtype=np.int64) for s in subsets]

    if cfg.standardize:
        center = obs.mean(axis=0)
        scale = obs.std(axis=0)
        scale[scale == 0] = 1.0
    else:
        center = np.zeros(K)
        scale = np.ones(K)
    z = (obs - center) / scale
    X_all, Y = _pairs(z, y, cfg.horizon)

    predictors = []
    for ch in subsets:
        X = np.ascontiguousarray(X_all[:, ch])
        loo = _loo_votes(X, Y, cfg.k_nn)
        err = float(np.sqrt(np.mean((loo[:, 0] - Y[:, 0]) ** 2)))
        predictors.append(WeakPredictor(ch, X, Y.copy(), err))
    return ReconstructionModel(predictors, cfg, center, scale)


def trimmed_weighted_mean(votes: np.ndarray, weights: np.ndarray, trim: float) -> float:
    """Drop ``ceil(trim * n)`` votes at each end (when some remain), then weight."""
    votes = np.asarray(votes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = votes.shape[0]
    cut = math.ceil(trim * n) if trim > 0 else 0
    if n - 2 * cut < 1:
        cut = 0
    order = np.lexsort((weights, votes))
    keep = order[cut : n - cut]
    w = weights[keep]
    return float(np.dot(w, votes[keep]) / w.sum())


def ensemble_votes(model: ReconstructionModel, observation) -> np.ndarray:
    """Votes of every weak predictor, shape (M, horizon)."""
    o = np.asarray(observation, dtype=float).ravel()
    z = (o - model.center) / model.scale if model.center.size else o
    q = z[model._ch]
    diff = model._X - q[:, None, :]
    d2 = np.einsum("mnk,mnk->mn", diff, diff)
    return _knn_votes(model._X, model._Y, d2, model.cfg.k_nn)


def predict(model: ReconstructionModel, observation) -> tuple[np.ndarray, np.ndarray]:
    """Point forecast per horizon step and the inter-decile spread of the votes."""
    if model is None or not model.predictors:
        raise ValueError("model is empty")
    votes = ensemble_votes(model, observation)
    weights = 1.0 / (model._err + model.cfg.eps_w)
    forecast = np.array([trimmed_weighted_mean(votes[:, h], weights, model.cfg.trim) for h in range(votes.shape[1])])
    spread = np.quantile(votes, 0.9, axis=0) - np.quantile(votes, 0.1, axis=0)
    return forecast, spread


def choose_embedding_dim(series, max_E: int = 8, delay: int = 2, r_tol: float = 10.0, a_tol: float = 2.0, fraction: float = 0.05) -> int:
    """Smallest E whose false-nearest-neighbour fraction is below ``fraction``.

    Uses both the distance-ratio test and the attractor-size test; returns
    ``max_E`` when no dimension qualifies.
    """
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if x.shape[0] < 10 * max_E:
        raise ValueError("series must have at least 10 * max_E samples")
    spread = x.std()
    tiny = 1e-9 * max(spread, np.abs(x).max(initial=0.0))
    for E in range(1, max_E + 1):
        n = x.shape[0] - E * delay
        if n < 2:
            return max_E
        vec = np.stack([x[k * delay : k * delay + n] for k in range(E)], axis=1)
        nxt = x[E * delay : E * delay + n]
        tree = cKDTree(vec)
        dist, idx = tree.query(vec, k=2)
        # self may not come first when duplicates exist
        nn = np.where(idx[:, 0] == np.arange(n), idx[:, 1], idx[:, 0])
        d = np.linalg.norm(vec - vec[nn], axis=1)
        gap = np.abs(nxt - nxt[nn])
        # exact recurrences (periodic data) must not count as false by round-off
        false = gap > r_tol * d + tiny
        if spread > 0:
            false |= np.sqrt(d**2 + gap**2) / spread > a_tol
        if false.mean() < fraction:
            return E
    return max_E
