"""Supervised online baselines: naive persistence and an SGD autoregressor."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

DIVERGENCE_NORM = 1e6


def naive_predict(tail) -> float:
    tail = np.asarray(tail, dtype=float).ravel()
    if tail.size == 0:
        raise ValueError("need at least one observation")
    return float(tail[-1])


@dataclass
class OnlineAr:
    """Linear AR(p) with bias, trained by one SGD step per observation.

    ``weights[0]`` is the bias; ``weights[k]`` multiplies lag k.
    """

    p: int = 8
    lr: float = 0.01
    weights: np.ndarray = None
    history: deque = field(default_factory=deque)
    last_prediction: float | None = None
    resets: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("order p must be >= 1")
        if self.weights is None:
            self.weights = np.zeros(self.p + 1)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.p + 1,):
            raise ValueError("weights must have p + 1 entries")
        self.history = deque(self.history, maxlen=self.p)

    def features(self) -> np.ndarray:
        lags = list(self.history)[::-1]
        return np.concatenate(([1.0], lags))

    @property
    def ready(self) -> bool:
        return len(self.history) == self.p


def ar_step(model: OnlineAr, y: float) -> tuple[OnlineAr, float, bool]:
    """Learn from observation ``y`` and forecast the next value.

    Returns ``(model, prediction, diverged)``. Until ``p`` lags exist the
    forecast is the last value and no update happens. When the weight norm
    exceeds ``DIVERGENCE_NORM`` the weights are reset to zero and
    ``diverged`` is True.
    """
    diverged = False
    if model.ready and model.last_prediction is not None:
        x = model.features()
        err = model.last_prediction - y
        model.weights = model.weights - model.lr * err * x
        if not np.all(np.isfinite(model.weights)) or np.linalg.norm(model.weights) > DIVERGENCE_NORM:
            model.weights = np.zeros_like(model.weights)
            model.resets += 1
            diverged = True
    model.history.append(float(y))
    if model.ready:
        pred = float(model.weights @ model.features())
    else:
        pred = float(y)
    model.last_prediction = pred if model.ready else None
    return model, pred, diverged
