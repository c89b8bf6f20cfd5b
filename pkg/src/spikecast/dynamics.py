"""Evolving Lorenz63 generator, sinusoidal trends and z-score normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class IntegrationDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class LorenzParams:
    rho: float
    sigma: float
    beta: float

    def __post_init__(self):
        if not all(np.isfinite([self.rho, self.sigma, self.beta])):
            raise ValueError("Lorenz parameters must be finite")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


FIXED_POINT = LorenzParams(rho=60.0, sigma=20.0, beta=8.0)
CHAOS = LorenzParams(rho=36.0, sigma=8.5, beta=3.5)
LIMIT_CYCLE = LorenzParams(rho=35.0, sigma=21.0, beta=1.0)
NORMAL = LorenzParams(rho=28.0, sigma=10.0, beta=2.66)

MODES = {"fp": FIXED_POINT, "chaos": CHAOS, "lc": LIMIT_CYCLE, "normal": NORMAL}
MODE_LENGTH = 300


@dataclass(frozen=True)
class ModeSchedule:
    segments: tuple[tuple[LorenzParams, int], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule must contain at least one segment")
        for _, length in self.segments:
            if int(length) < 1:
                raise ValueError("segment lengths must be >= 1")

    @classmethod
    def canonical(cls, length: int = MODE_LENGTH) -> "ModeSchedule":
        """FP -> chaos -> limit cycle -> normal, ``length`` samples each."""
        return cls(tuple((p, length) for p in MODES.values()))

    @property
    def boundaries(self) -> list[int]:
        """Start index of every segment, plus the total length at the end."""
        out = [0]
        for _, length in self.segments:
            out.append(out[-1] + int(length))
        return out

    def __len__(self):
        return self.boundaries[-1]


@dataclass(frozen=True)
class TrendSpec:
    amplitude: float = 0.0
    period: float = 1.0

    def __post_init__(self):
        if self.amplitude != 0 and self.period < 1:
            raise ValueError("trend period must be >= 1 when amplitude != 0")


@dataclass
class TimeSeries:
    values: np.ndarray
    dt: float = 1.0
    origin: str = "synthetic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] < 1:
            raise ValueError("time series must have at least one sample")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("time series contains NaN or Inf")
        if self.origin not in ("synthetic", "file"):
            raise ValueError(f"unknown origin {self.origin!r}")

    def __len__(self):
        return self.values.shape[0]


def lorenz_rhs(state: np.ndarray, params: LorenzParams) -> np.ndarray:
    x, y, z = state
    return np.array(
        [
            params.sigma * (y - x),
            x * (params.rho - z) - y,
            x * y - params.beta * z,
        ]
    )


def lorenz_step(state: Sequence[float], params: LorenzParams, h: float = 0.01) -> np.ndarray:
    """Advance the Lorenz63 state by one classical RK4 step of size ``h``."""
    if h <= 0:
        raise ValueError("step size must be positive")
    s = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(s)):
        raise IntegrationDiverged("non-finite state")
    k1 = lorenz_rhs(s, params)
    k2 = lorenz_rhs(s + 0.5 * h * k1, params)
    k3 = lorenz_rhs(s + 0.5 * h * k2, params)
    k4 = lorenz_rhs(s + h * k3, params)
    out = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationDiverged(f"RK4 step produced {out}")
    return out


DEFAULT_INITIAL = (1.0, 1.0, 1.0)


def generate_evolving(
    schedule: ModeSchedule,
    h: float = 0.01,
    seed: int = 0,
    initial: Sequence[float] | None = None,
    substeps: int = 1,
    return_states: bool = False,
):
    """Integrate the schedule and project the trajectory onto the x axis.

    One stored sample is taken every ``substeps`` RK4 steps. The state is
    carried across segment boundaries; only the parameters change. When
    ``initial`` is None the start point is ``DEFAULT_INITIAL`` jittered by a
    seeded N(0, 1e-3) draw.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if initial is None:
        rng = np.random.default_rng(seed)
        state = np.asarray(DEFAULT_INITIAL, dtype=float) + rng.normal(0.0, 1e-3, 3)
    else:
        state = np.asarray(initial, dtype=float).copy()
    states = np.empty((len(schedule), 3))
    i = 0
    for params, length in schedule.segments:
        for _ in range(int(length)):
            for _ in range(substeps):
                state = lorenz_step(state, params, h)
            states[i] = state
            i += 1
    series = TimeSeries(
        states[:, 0].copy(),
        dt=h * substeps,
        origin="synthetic",
        meta={"boundaries": schedule.boundaries},
    )
    if return_states:
        return series, states
    return series


def trend_signal(n: int, trend: TrendSpec) -> np.ndarray:
    if trend.amplitude == 0:
        return np.zeros(n)
    t = np.arange(n, dtype=float)
    return trend.amplitude * np.sin(2 * np.pi * t / trend.period)


def apply_trend(series: TimeSeries, trend: TrendSpec) -> TimeSeries:
    if trend.amplitude == 0:
        return series
    values = series.values + trend_signal(len(series), trend)
    meta = dict(series.meta, trend=(trend.amplitude, trend.period))
    return TimeSeries(values, dt=series.dt, origin=series.origin, meta=meta)


@dataclass(frozen=True)
class Affine:
    """Maps normalized values back via ``raw = z * scale + offset``."""

    offset: float
    scale: float

    def inverse(self, z):
        return np.asarray(z, dtype=float) * self.scale + self.offset

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.offset) / self.scale


def normalize(series: TimeSeries) -> tuple[TimeSeries, Affine]:
    if len(series) < 2:
        raise ValueError("normalization needs at least two samples")
    mean = float(series.values.mean())
    std = float(series.values.std())
    if std == 0.0:
        aff = Affine(offset=mean, scale=1.0)
    else:
        aff = Affine(offset=mean, scale=std)
    z = aff.forward(series.values)
    return TimeSeries(z, dt=series.dt, origin=series.origin, meta=dict(series.meta)), aff


def denormalize(series: TimeSeries, aff: Affine) -> TimeSeries:
    return TimeSeries(aff.inverse(series.values), dt=series.dt, origin=series.origin, meta=dict(series.meta))
