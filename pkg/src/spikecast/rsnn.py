"""Recurrent network of LIF neurons with pair-based STDP.

Time is discrete: one simulation step per input sample. Synaptic matrices
are stored dense and indexed ``[pre, post]``. Stored weights are
magnitudes in ``[w_min, w_max]``; inhibitory rows enter the current with a
negative sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import SpikeRaster


@dataclass(frozen=True)
class LifParams:
    tau_m: float = 20.0
    v_rest: float = -65.0
    v_th: float = -55.0
    v_reset: float = -70.0
    refractory: int = 2

    def __post_init__(self):
        if self.tau_m <= 0:
            raise ValueError("tau_m must be positive")
        if not self.v_reset <= self.v_rest < self.v_th:
            raise ValueError("need v_reset <= v_rest < v_th")
        if self.refractory < 0:
            raise ValueError("refractory must be >= 0")

    @property
    def decay(self) -> float:
        return math.exp(-1.0 / self.tau_m)


@dataclass(frozen=True)
class StdpParams:
    eta_plus: float = 0.01
    eta_minus: float = 0.01
    tau_plus: float = 20.0
    tau_minus: float = 20.0
    w_min: float = 0.0
    w_max: float = 1.0

    def __post_init__(self):
        if min(self.eta_plus, self.eta_minus, self.tau_plus, self.tau_minus) <= 0:
            raise ValueError("STDP rates and time constants must be positive")
        if self.w_min < 0 or not self.w_min < self.w_max:
            raise ValueError("need 0 <= w_min < w_max")

    def dw(self, delta_t: float, w: float) -> float:
        """Closed-form pair update for ``delta_t = t_post - t_pre``."""
        if delta_t >= 0:
            return self.eta_plus * (self.w_max - w) * math.exp(-abs(delta_t) / self.tau_plus)
        return -self.eta_minus * (w - self.w_min) * math.exp(-abs(delta_t) / self.tau_minus)


@dataclass(frozen=True)
class SynapseParams:
    """Scales mapping weights to membrane increments (mV per unit weight)."""

    gain: float = 0.25
    inhibitory_scale: float = 4.0
    input_weight: float = 8.0
    input_fraction: float = 0.05


@dataclass
class Topology:
    n_neurons: int
    excitatory: np.ndarray
    mask: np.ndarray
    weights: np.ndarray
    connectivity_p: float
    input_weights: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def n_excitatory(self) -> int:
        return int(self.excitatory.sum())

    @property
    def plastic(self) -> np.ndarray:
        return self.mask & self.excitatory[:, None]

    @property
    def sign(self) -> np.ndarray:
        return np.where(self.excitatory, 1.0, -1.0)

    @property
    def n_synapses(self) -> int:
        return int(self.mask.sum())

    def synapses(self, weights: np.ndarray | None = None):
        """Yield ``(pre, post, signed_weight, plastic)`` in row-major order."""
        w = self.weights if weights is None else weights
        plastic = self.plastic
        sign = self.sign
        pre, post = np.nonzero(self.mask)
        for i, j in zip(pre.tolist(), post.tolist()):
            yield i, j, float(sign[i] * w[i, j]), bool(plastic[i, j])

    def adjacency(self, include_inputs: bool = False) -> np.ndarray:
        """Boolean digraph; input-layer nodes (if any) are appended after the neurons."""
        if not include_inputs or self.input_weights.size == 0:
            return self.mask.copy()
        c = self.input_weights.shape[0]
        n = self.n_neurons
        adj = np.zeros((n + c, n + c), dtype=bool)
        adj[:n, :n] = self.mask
        adj[n:, :n] = self.input_weights != 0
        return adj


def build_topology(
    n: int,
    p: float = 0.2,
    seed: int = 0,
    stdp: StdpParams | None = None,
    input_channels: int = 0,
    syn: SynapseParams | None = None,
) -> Topology:
    """Erdos-Renyi digraph with the first ceil(4n/5) neurons excitatory."""
    if n < 5:
        raise ValueError("need at least 5 neurons")
    if not 0 < p <= 1:
        raise ValueError("connectivity must lie in (0, 1]")
    stdp = stdp or StdpParams()
    syn = syn or SynapseParams()
    rng = np.random.default_rng(seed)
    n_exc = math.ceil(4 * n / 5)
    excitatory = np.arange(n) < n_exc
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    span = stdp.w_max - stdp.w_min
    w0 = stdp.w_min + span * rng.uniform(0.3, 0.7, size=(n, n))
    weights = np.where(mask, w0, 0.0)
    input_weights = np.zeros((input_channels, n))
    k = max(1, int(round(syn.input_fraction * n_exc)))
    for c in range(input_channels):
        targets = rng.choice(n_exc, size=k, replace=False)
        input_weights[c, targets] = syn.input_weight
    return Topology(n, excitatory, mask, weights, p, input_weights)


@dataclass
class RsnnState:
    v: np.ndarray
    refractory_left: np.ndarray
    pre_trace: np.ndarray
    post_trace: np.ndarray
    weights: np.ndarray
    last_spikes: np.ndarray
    step: int = 0
    plastic: bool = True

    @classmethod
    def initial(cls, topology: Topology, lif: LifParams, plastic: bool = True) -> "RsnnState":
        n = topology.n_neurons
        return cls(
            v=np.full(n, lif.v_rest),
            refractory_left=np.zeros(n, dtype=np.int64),
            pre_trace=np.zeros(n),
            post_trace=np.zeros(n),
            weights=topology.weights.copy(),
            last_spikes=np.zeros(n, dtype=bool),
            plastic=plastic,
        )

    def copy(self) -> "RsnnState":
        return replace(
            self,
            v=self.v.copy(),
            refractory_left=self.refractory_left.copy(),
            pre_trace=self.pre_trace.copy(),
            post_trace=self.post_trace.copy(),
            weights=self.weights.copy(),
            last_spikes=self.last_spikes.copy(),
        )


def freeze_plasticity(state: RsnnState) -> RsnnState:
    state.plastic = False
    return state


def resume_plasticity(state: RsnnState) -> RsnnState:
    state.plastic = True
    return state


def recurrent_current(state: RsnnState, topology: Topology, syn: SynapseParams) -> np.ndarray:
    s = state.last_spikes
    if not s.any():
        return np.zeros(topology.n_neurons)
    idx = np.flatnonzero(s)
    scale = np.where(topology.excitatory[idx], syn.gain, -syn.gain * syn.inhibitory_scale)
    return scale @ state.weights[idx]


def stdp_update(state: RsnnState, topology: Topology, spikes: np.ndarray, stdp: StdpParams) -> None:
    """Nearest-neighbour pair STDP through exponential traces, in place.

    Pre spikes in the current step pair with post spikes in the same step as
    delta_t = 0 (potentiation). Depression only sees post spikes from
    earlier steps.
    """
    state.pre_trace *= math.exp(-1.0 / stdp.tau_plus)
    state.post_trace *= math.exp(-1.0 / stdp.tau_minus)
    state.pre_trace[spikes] = 1.0
    w = state.weights
    plastic = topology.plastic
    post = np.flatnonzero(spikes)
    if post.size:
        cols = w[:, post]
        dw = stdp.eta_plus * (stdp.w_max - cols) * state.pre_trace[:, None]
        w[:, post] = np.where(plastic[:, post], cols + dw, cols)
    pre = np.flatnonzero(spikes & topology.excitatory)
    if pre.size:
        rows = w[pre]
        dw = stdp.eta_minus * (rows - stdp.w_min) * state.post_trace[None, :]
        w[pre] = np.where(plastic[pre], rows - dw, rows)
    if post.size or pre.size:
        np.clip(w, stdp.w_min, stdp.w_max, out=w, where=plastic)
    state.post_trace[spikes] = 1.0


def step(
    state: RsnnState,
    topology: Topology,
    input_current,
    lif: LifParams,
    stdp: StdpParams,
    plastic: bool | None = None,
    syn: SynapseParams | None = None,
) -> tuple[RsnnState, np.ndarray]:
    """Advance one step in place and return ``(state, spikes)``.

    ``input_current`` is the external drive in mV per step; recurrent input
    from the previous step's spikes is added internally.
    """
    syn = syn or SynapseParams()
    current = np.asarray(input_current, dtype=float)
    if current.ndim == 0:
        current = np.full(topology.n_neurons, float(current))
    if current.shape != (topology.n_neurons,):
        raise ValueError("input current has the wrong shape")
    if not np.all(np.isfinite(current)):
        raise ValueError("input current is not finite")
    total = current + recurrent_current(state, topology, syn)

    v = lif.v_rest + (state.v - lif.v_rest) * lif.decay + total
    refractory = state.refractory_left > 0
    v[refractory] = lif.v_reset
    spikes = ~refractory & (v >= lif.v_th)
    v[spikes] = lif.v_reset
    state.refractory_left = np.where(refractory, state.refractory_left - 1, 0)
    state.refractory_left[spikes] = lif.refractory
    state.v = v

    if state.plastic if plastic is None else plastic:
        stdp_update(state, topology, spikes, stdp)
    state.last_spikes = spikes
    state.step += 1
    return state, spikes


class Network:
    """Bundles topology, parameters and mutable state."""

    def __init__(
        self,
        topology: Topology,
        lif: LifParams | None = None,
        stdp: StdpParams | None = None,
        syn: SynapseParams | None = None,
        plastic: bool = True,
    ):
        self.topology = topology
        self.lif = lif or LifParams()
        self.stdp = stdp or StdpParams()
        self.syn = syn or SynapseParams()
        self.state = RsnnState.initial(topology, self.lif, plastic)

    def drive(self, channel_spikes: np.ndarray) -> np.ndarray:
        return np.asarray(channel_spikes, dtype=float) @ self.topology.input_weights

    def step(self, input_current) -> np.ndarray:
        _, spikes = step(self.state, self.topology, input_current, self.lif, self.stdp, syn=self.syn)
        return spikes

    def step_channels(self, channel_spikes: np.ndarray) -> np.ndarray:
        return self.step(self.drive(channel_spikes))


def run(
    network: Network,
    drive,
    steps: int | None = None,
    record=None,
) -> tuple[np.ndarray, SpikeRaster]:
    """Drive the network and record membrane potentials.

    ``drive`` is either a :class:`SpikeRaster` over the encoder channels or a
    current array of shape (steps, n_neurons). Returns ``(traces, raster)``
    where ``traces`` has shape (len(record), steps) and ``raster`` holds the
    spikes of every neuron.
    """
    if record is None:
        raise ValueError("recording set must not be empty")
    record = np.asarray(list(record), dtype=np.int64)
    if record.size == 0:
        raise ValueError("recording set must not be empty")
    n = network.topology.n_neurons
    if record.min() < 0 or record.max() >= n:
        raise ValueError("recording set must be a subset of the neurons")
    if isinstance(drive, SpikeRaster):
        dense = drive.to_dense()
        currents = dense.T.astype(float) @ network.topology.input_weights
    else:
        currents = np.asarray(drive, dtype=float)
        if currents.ndim == 1:
            currents = np.repeat(currents[:, None], n, axis=1)
    if steps is None:
        steps = currents.shape[0]
    traces = np.empty((record.size, steps))
    spikes = np.zeros((n, steps), dtype=bool)
    for t in range(steps):
        spikes[:, t] = network.step(currents[t] if t < currents.shape[0] else np.zeros(n))
        traces[:, t] = network.state.v[record]
    return traces, SpikeRaster.from_dense(spikes)
