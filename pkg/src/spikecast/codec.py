"""Step-forward spike encoding and sliding-window decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class EncoderConfig:
    """Population step-forward encoder.

    Channels come in (up, down) pairs sharing a baseline; pair ``j`` uses
    threshold ``sf_threshold * ratio**j``. Channel ``2j`` is the up channel
    and ``2j + 1`` the down channel of pair ``j``.
    """

    channels: int = 8
    sf_threshold: float = 0.1
    ratio: float = 2.0

    def __post_init__(self):
        if self.channels < 2 or self.channels % 2:
            raise ValueError("channels must be even and >= 2")
        if self.sf_threshold <= 0:
            raise ValueError("sf_threshold must be positive")
        if self.ratio <= 0:
            raise ValueError("ratio must be positive")

    @property
    def thresholds(self) -> np.ndarray:
        return self.sf_threshold * self.ratio ** np.arange(self.channels // 2)


@dataclass
class SpikeRaster:
    events: list[np.ndarray]
    horizon: int

    def __post_init__(self):
        self.events = [np.asarray(e, dtype=np.int64) for e in self.events]
        for e in self.events:
            if e.size and (np.any(np.diff(e) <= 0) or e[0] < 0 or e[-1] >= self.horizon):
                raise ValueError("spike indices must be strictly increasing and within [0, horizon)")

    @property
    def n_channels(self) -> int:
        return len(self.events)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_channels, self.horizon), dtype=bool)
        for c, e in enumerate(self.events):
            out[c, e] = True
        return out

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SpikeRaster":
        dense = np.asarray(dense, dtype=bool)
        return cls([np.flatnonzero(row) for row in dense], dense.shape[1])

    def truncate(self, length: int) -> "SpikeRaster":
        return SpikeRaster([e[e < length] for e in self.events], length)

    def count(self) -> int:
        return int(sum(e.size for e in self.events))


class StepForwardEncoder:
    """Incremental encoder; ``push`` consumes one sample at a time."""

    def __init__(self, cfg: EncoderConfig):
        self.cfg = cfg
        self.thresholds = cfg.thresholds
        self.baseline: np.ndarray | None = None

    def push(self, x: float) -> np.ndarray:
        spikes = np.zeros(self.cfg.channels, dtype=bool)
        if self.baseline is None:
            self.baseline = np.full(self.thresholds.shape, float(x))
            return spikes
        up = x >= self.baseline + self.thresholds
        down = ~up & (x <= self.baseline - self.thresholds)
        self.baseline = self.baseline + self.thresholds * (up.astype(float) - down.astype(float))
        spikes[0::2] = up
        spikes[1::2] = down
        return spikes


def encode(series, cfg: EncoderConfig) -> SpikeRaster:
    values = np.asarray(getattr(series, "values", series), dtype=float)
    enc = StepForwardEncoder(cfg)
    dense = np.stack([enc.push(v) for v in values], axis=1)
    return SpikeRaster.from_dense(dense)


def reconstruct(raster: SpikeRaster, cfg: EncoderConfig, x0: float) -> np.ndarray:
    """Invert the encoding per threshold pair: ``x0 + th * (ups - downs)``.

    Returns an array of shape (pairs, horizon).
    """
    dense = raster.to_dense().astype(float)
    net = np.cumsum(dense[0::2] - dense[1::2], axis=1)
    return x0 + cfg.thresholds[:, None] * net


@dataclass(frozen=True)
class DecoderConfig:
    tau: int = 30
    gamma: float = 0.924

    def __post_init__(self):
        if not 1 <= self.tau <= 50:
            raise ValueError("tau must lie in [1, 50]")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.gamma ** (self.tau - 1) < 0.1:
            raise ValueError("gamma**(tau - 1) must be >= 0.1")


def decode_kernel(cfg: DecoderConfig) -> np.ndarray:
    return cfg.gamma ** np.arange(cfg.tau + 1)


def decode(raster: SpikeRaster, cfg: DecoderConfig) -> np.ndarray:
    """r[c, t] = sum_{n=0..tau} gamma**n * s[c, t - n]; shape (channels, horizon)."""
    dense = raster.to_dense().astype(float)
    kernel = decode_kernel(cfg)
    out = np.zeros_like(dense)
    for c in range(dense.shape[0]):
        out[c] = np.convolve(dense[c], kernel)[: raster.horizon]
    return out


class RateDecoder:
    """Streaming form of :func:`decode` over a ring buffer of spike vectors."""

    def __init__(self, n: int, cfg: DecoderConfig):
        self.kernel = decode_kernel(cfg)
        self.buf = np.zeros((cfg.tau + 1, n))
        self.pos = 0

    def push(self, spikes: np.ndarray) -> np.ndarray:
        self.pos = (self.pos - 1) % self.buf.shape[0]
        self.buf[self.pos] = spikes
        order = (self.pos + np.arange(self.buf.shape[0])) % self.buf.shape[0]
        return self.kernel @ self.buf[order]


def decode_membrane(potentials: Sequence[Sequence[float]], zscore: bool = False) -> np.ndarray:
    """Stack per-neuron membrane traces as channels, optionally z-scored."""
    traces = [np.asarray(p, dtype=float) for p in potentials]
    if not traces:
        return np.zeros((0, 0))
    lengths = {t.shape[0] for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"membrane traces have mismatched lengths {sorted(lengths)}")
    out = np.stack(traces)
    if zscore:
        mean = out.mean(axis=1, keepdims=True)
        std = out.std(axis=1, keepdims=True)
        std[std == 0] = 1.0
        out = (out - mean) / std
    return out


def gamma_floor(tau: int, floor: float = 0.1, decimals: int = 3) -> float:
    """Smallest ``decimals``-rounded gamma with gamma**(tau - 1) >= floor."""
    if tau <= 1:
        return round(floor, decimals)
    g = math.ceil(floor ** (1.0 / (tau - 1)) * 10**decimals) / 10**decimals
    return min(g, 1.0)
