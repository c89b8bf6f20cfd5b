"""Online prediction loop: encode -> RSNN step -> sampled-neuron readout ->
RDE forecast -> rolling loss -> threshold-triggered refit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rde
from .baselines import OnlineAr, ar_step
from .codec import DecoderConfig, EncoderConfig, RateDecoder, StepForwardEncoder
from .graph import betweenness, default_k, top_k
from .rsnn import LifParams, Network, StdpParams, SynapseParams, build_topology
from .tda import TdaConfig, diagram_distance, window_diagram

DEFAULT_THRESHOLDS = {"rmse": 0.5, "wasserstein": 0.3}


@dataclass(frozen=True)
class LossSpec:
    kind: str = "wasserstein"
    window: int = 30
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in DEFAULT_THRESHOLDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.window < 2:
            raise ValueError("loss window must be >= 2")
        if self.threshold is not None and not self.threshold > 0:
            raise ValueError("threshold must be > 0")

    @property
    def theta(self) -> float:
        return DEFAULT_THRESHOLDS[self.kind] if self.threshold is None else self.threshold


@dataclass(frozen=True)
class ConvergenceSpec:
    epsilon: float = 0.1
    boundaries: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class PipelineConfig:
    neurons: int = 500
    connectivity: float = 0.2
    encoder: EncoderConfig = EncoderConfig()
    decoder: DecoderConfig = DecoderConfig()
    readout: str = "membrane"
    lif: LifParams = LifParams()
    stdp: StdpParams = StdpParams()
    synapse: SynapseParams = SynapseParams()
    sampling: str = "betweenness"
    recorded: int | None = None
    rde: rde.RdeConfig = rde.RdeConfig()
    target: str = "increment"
    buffer: int = 200
    cooldown: int | None = None
    tda: TdaConfig = TdaConfig()

    def __post_init__(self):
        if self.readout not in ("membrane", "rate"):
            raise ValueError("readout must be 'membrane' or 'rate'")
        if self.sampling not in ("betweenness", "random", "all"):
            raise ValueError("sampling must be 'betweenness', 'random' or 'all'")
        if self.target not in ("increment", "level"):
            raise ValueError("target must be 'increment' or 'level'")
        if self.buffer < self.rde.k_nn + 2:
            raise ValueError("buffer too small for k_nn")

    @property
    def k(self) -> int:
        if self.sampling == "all":
            return self.neurons
        return self.recorded if self.recorded is not None else default_k(self.neurons)


def rolling_rmse(observed, predicted) -> float:
    y = np.asarray(observed, dtype=float)
    yhat = np.asarray(predicted, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError("observed and predicted windows differ in length")
    if y.size == 0:
        raise ValueError("empty window")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


class RollingSquares:
    """Running sum of squared errors over a trailing window."""

    def __init__(self, window: int):
        self.window = window
        self.buf = np.zeros(window)
        self.count = 0
        self.total = 0.0
        self.pos = 0

    def push(self, err: float) -> float:
        sq = err * err
        if self.count == self.window:
            self.total -= self.buf[self.pos]
        else:
            self.count += 1
        self.buf[self.pos] = sq
        self.pos = (self.pos + 1) % self.window
        self.total += sq
        if self.count == self.window and self.pos == 0:
            # resum once per lap so cancellation error cannot accumulate
            self.total = float(self.buf.sum())
        return math.sqrt(max(self.total, 0.0) / self.count)


@dataclass
class Observations:
    values: np.ndarray
    recorded: list[int]
    scores: np.ndarray | None = None
    spike_count: int = 0


def reservoir_observations(series, cfg: PipelineConfig, seed: int = 0) -> Observations:
    """Stream the series through encoder and RSNN, returning the readout per step.

    Row t depends only on samples 0..t.
    """
    y = np.asarray(getattr(series, "values", series), dtype=float)
    seeds = np.random.SeedSequence(seed).spawn(3)
    topo_seed = int(seeds[0].generate_state(1)[0])
    sample_rng = np.random.default_rng(seeds[1])
    topo = build_topology(
        cfg.neurons, cfg.connectivity, topo_seed, cfg.stdp, input_channels=cfg.encoder.channels, syn=cfg.synapse
    )
    scores = None
    if cfg.sampling == "betweenness":
        scores = betweenness(topo.adjacency(include_inputs=True)).scores[: cfg.neurons]
        recorded = top_k(scores, cfg.k)
    elif cfg.sampling == "random":
        recorded = sorted(int(i) for i in sample_rng.choice(cfg.neurons, size=cfg.k, replace=False))
    else:
        recorded = list(range(cfg.neurons))
    net = Network(topo, cfg.lif, cfg.stdp, cfg.synapse, plastic=True)
    enc = StepForwardEncoder(cfg.encoder)
    dec = RateDecoder(cfg.neurons, cfg.decoder) if cfg.readout == "rate" else None
    idx = np.asarray(recorded)
    out = np.empty((y.shape[0], idx.size))
    spikes_total = 0
    for t, v in enumerate(y):
        spikes = net.step_channels(enc.push(v))
        spikes_total += int(spikes.sum())
        if dec is None:
            out[t] = net.state.v[idx]
        else:
            out[t] = dec.push(spikes)[idx]
    return Observations(out, recorded, scores, spikes_total)


@dataclass
class RunRecord:
    observed: np.ndarray
    predicted: np.ndarray
    rolling_rmse: np.ndarray
    rolling_dw: np.ndarray
    refit: np.ndarray
    warm: np.ndarray
    boundaries: list[int]
    window: int
    eval_start: int
    fits: list[int] = field(default_factory=list)
    name: str = ""

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.observed.shape[0])

    @property
    def refit_count(self) -> int:
        return int(self.refit.sum())

    def mode_slices(self):
        b = self.boundaries
        return [slice(b[i], b[i + 1]) for i in range(len(b) - 1)]

    def _per_mode(self, arr: np.ndarray) -> np.ndarray:
        out = []
        for sl in self.mode_slices():
            lo = max(sl.start, self.eval_start)
            seg = arr[lo : sl.stop]
            seg = seg[np.isfinite(seg)]
            if seg.size:
                out.append(float(seg.mean()))
        return np.array(out)

    def mode_rmse(self) -> np.ndarray:
        return self._per_mode(self.rolling_rmse)

    def mode_dw(self) -> np.ndarray:
        return self._per_mode(self.rolling_dw)

    def summary(self, epsilon: float = 0.1) -> dict:
        r, d = self.mode_rmse(), self.mode_dw()
        conv = convergence_steps(self, ConvergenceSpec(epsilon))
        return {
            "name": self.name,
            "avg_rmse": float(r.mean()) if r.size else math.nan,
            "std_rmse": float(r.std()) if r.size else math.nan,
            "avg_dw": float(d.mean()) if d.size else math.nan,
            "std_dw": float(d.std()) if d.size else math.nan,
            "mode_rmse": [float(v) for v in r],
            "mode_dw": [float(v) for v in d],
            "convergence_steps": [int(c) for c in conv],
            "refit_count": self.refit_count,
            "fits": [int(f) for f in self.fits],
        }


class _DwTracker:
    """Rolling d_W with the observed-window diagrams cached by end index."""

    def __init__(self, observed: np.ndarray, cfg: TdaConfig, cache: dict | None = None):
        self.observed = observed
        self.cfg = cfg
        self.cache = {} if cache is None else cache

    def __call__(self, predicted: np.ndarray, t: int) -> float:
        w = self.cfg.window
        if t + 1 < w:
            return math.nan
        if t not in self.cache:
            self.cache[t] = window_diagram(self.observed[t + 1 - w : t + 1], self.cfg)
        pd = window_diagram(predicted[t + 1 - w : t + 1], self.cfg)
        return diagram_distance(self.cache[t], pd, self.cfg)


def _boundaries(series, n: int) -> list[int]:
    meta = getattr(series, "meta", {}) or {}
    b = meta.get("boundaries")
    return list(b) if b else [0, n]


def _tda_for(loss: LossSpec, cfg: PipelineConfig) -> TdaConfig:
    tda = cfg.tda
    if tda.window != loss.window:
        tda = TdaConfig(loss.window, tda.embed_dim, tda.delay, tda.q, tda.dim, tda.fallback_dim, tda.include_essential)
    return tda


def run_online(
    series,
    cfg: PipelineConfig | None = None,
    loss: LossSpec | None = None,
    seed: int = 0,
    observations: Observations | None = None,
    record_dw: bool = True,
    dw_cache: dict | None = None,
    name: str = "",
) -> RunRecord:
    """Run the online loop over ``series`` (already normalized).

    Warm-up lasts ``buffer + window`` steps with naive predictions; the first
    RDE fit happens at step ``warmup - 1`` on the trailing buffer, and later
    refits fire when the rolling loss exceeds the threshold and at least
    ``cooldown`` steps have passed since the previous fit.
    """
    cfg = cfg or PipelineConfig()
    loss = loss or LossSpec()
    y = np.asarray(getattr(series, "values", series), dtype=float)
    T = y.shape[0]
    window = loss.window
    warmup = cfg.buffer + window
    if T <= warmup:
        raise ValueError(f"series of length {T} is not longer than warm-up {warmup}")
    if observations is None:
        observations = reservoir_observations(series, cfg, seed)
    obs = observations.values
    if obs.shape[0] != T:
        raise ValueError("observations do not cover the series")
    cooldown = window if cfg.cooldown is None else cfg.cooldown
    theta = loss.theta
    tda = _tda_for(loss, cfg)
    dw = _DwTracker(y, tda, dw_cache)
    rde_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    target = np.r_[0.0, np.diff(y)] if cfg.target == "increment" else y

    pred = np.empty(T)
    pred[0] = y[0]
    warm = np.ones(T, dtype=bool)
    rmse = np.full(T, math.nan)
    dws = np.full(T, math.nan)
    refit = np.zeros(T, dtype=bool)
    squares = RollingSquares(window)
    fits: list[int] = []
    model = None
    last_fit = -(10**9)

    def do_fit(t: int):
        lo = t + 1 - cfg.buffer
        sub_seed = int(rde_rng.integers(2**63))
        return rde.fit(obs[lo : t + 1], target[lo : t + 1], cfg.rde, seed=sub_seed)

    for t in range(T):
        r = squares.push(y[t] - pred[t])
        if t + 1 >= window:
            rmse[t] = r
            if record_dw or loss.kind == "wasserstein":
                dws[t] = dw(pred, t)
        if model is None and t == warmup - 1:
            model = do_fit(t)
            fits.append(t)
            last_fit = t
        elif model is not None and t - last_fit >= cooldown:
            current = rmse[t] if loss.kind == "rmse" else dws[t]
            if current > theta:
                model = do_fit(t)
                fits.append(t)
                refit[t] = True
                last_fit = t
        if t + 1 < T:
            if model is None:
                pred[t + 1] = y[t]
            else:
                f, _ = rde.predict(model, obs[t])
                pred[t + 1] = f[0] + (y[t] if cfg.target == "increment" else 0.0)
                warm[t + 1] = False
    return RunRecord(y, pred, rmse, dws, refit, warm, _boundaries(series, T), window, warmup + window - 1, fits, name)


def run_baseline(
    series,
    kind: str,
    loss: LossSpec | None = None,
    cfg: PipelineConfig | None = None,
    ar: OnlineAr | None = None,
    dw_cache: dict | None = None,
    name: str = "",
) -> RunRecord:
    """Naive persistence (``kind='naive'``) or online AR (``kind='ar'``)."""
    cfg = cfg or PipelineConfig()
    loss = loss or LossSpec()
    y = np.asarray(getattr(series, "values", series), dtype=float)
    T = y.shape[0]
    window = loss.window
    warmup = cfg.buffer + window
    dw = _DwTracker(y, _tda_for(loss, cfg), dw_cache)
    pred = np.empty(T)
    pred[0] = y[0]
    if kind == "naive":
        pred[1:] = y[:-1]
    elif kind == "ar":
        model = ar or OnlineAr()
        for t in range(T - 1):
            model, p, _ = ar_step(model, y[t])
            pred[t + 1] = p
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    rmse = np.full(T, math.nan)
    dws = np.full(T, math.nan)
    squares = RollingSquares(window)
    for t in range(T):
        r = squares.push(y[t] - pred[t])
        if t + 1 >= window:
            rmse[t] = r
            dws[t] = dw(pred, t)
    return RunRecord(
        y, pred, rmse, dws, np.zeros(T, dtype=bool), np.zeros(T, dtype=bool), _boundaries(series, T), window,
        warmup + window - 1, [], name or kind,
    )


def convergence_steps(record: RunRecord, spec: ConvergenceSpec | None = None) -> list[int]:
    """Per segment, the offset N from the segment start after which
    |observed - predicted| < epsilon holds through the segment end.
    Returns the segment length when that never happens."""
    spec = spec or ConvergenceSpec()
    b = list(spec.boundaries) if spec.boundaries is not None else record.boundaries
    err = np.abs(record.observed - record.predicted)
    out = []
    for lo, hi in zip(b[:-1], b[1:]):
        bad = np.flatnonzero(err[lo:hi] >= spec.epsilon)
        out.append(int(bad[-1] + 1) if bad.size else 0)
    return out


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    threshold: float | None = None
    sampling: str | None = None


def standard_models() -> list[ModelSpec]:
    return [
        ModelSpec("wass", "wasserstein"),
        ModelSpec("rmse", "rmse"),
        ModelSpec("ar", "ar"),
        ModelSpec("naive", "naive"),
    ]


def model_spec(name: str) -> ModelSpec:
    table = {m.name: m for m in standard_models()}
    if name not in table:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(table)}")
    return table[name]


def run_model(
    series,
    spec: ModelSpec,
    cfg: PipelineConfig,
    seed: int,
    window: int = 30,
    obs_cache: dict | None = None,
    dw_cache: dict | None = None,
    ar: OnlineAr | None = None,
) -> RunRecord:
    if spec.kind in ("ar", "naive"):
        return run_baseline(series, spec.kind, LossSpec(window=window), cfg, ar=ar, dw_cache=dw_cache, name=spec.name)
    run_cfg = cfg
    if spec.sampling is not None and spec.sampling != cfg.sampling:
        run_cfg = replace(cfg, sampling=spec.sampling)
    key = (run_cfg.sampling, seed)
    if obs_cache is not None and key in obs_cache:
        obs = obs_cache[key]
    else:
        obs = reservoir_observations(series, run_cfg, seed)
        if obs_cache is not None:
            obs_cache[key] = obs
    loss = LossSpec(spec.kind, window, spec.threshold)
    return run_online(series, run_cfg, loss, seed, observations=obs, dw_cache=dw_cache, name=spec.name)


def compare_models(series, models, cfg: PipelineConfig | None = None, seed: int = 0, window: int = 30) -> list[dict]:
    """Run each model on the same series and seed; one summary row per model.

    Rows carry mean and std across mode segments of the per-mode average
    rolling RMSE and d_W. The reservoir pass is shared between models that
    sample neurons the same way.
    """
    cfg = cfg or PipelineConfig()
    if not models:
        raise ValueError("need at least one model")
    obs_cache: dict = {}
    dw_cache: dict = {}
    rows = []
    for spec in models:
        if isinstance(spec, str):
            spec = model_spec(spec)
        rec = run_model(series, spec, cfg, seed, window, obs_cache, dw_cache)
        rows.append(rec.summary())
    return rows
