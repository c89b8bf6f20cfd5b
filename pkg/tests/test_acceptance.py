"""Acceptance gate. Each test prints one ``ACCEPTANCE <n> PASS|FAIL`` line.

Criteria 1, 2, 3 and 8 run the full 1200-step pipeline with n=500 neurons on
five seeds and take several minutes in total.
"""

import dataclasses
import functools
import math
import time

import numpy as np
import pytest

from oracles import betweenness_oracle, rips_oracle, wasserstein_oracle
from test_rde import lorenz_channels
from spikecast.baselines import OnlineAr
from spikecast.config import RunConfig
from spikecast.dynamics import TrendSpec
from spikecast.experiments import load_dataset, run_experiment
from spikecast.graph import betweenness
from spikecast.pipeline import ModelSpec, run_model
from spikecast.rde import RdeConfig, fit, predict
from spikecast.rsnn import LifParams, RsnnState, StdpParams, Topology, build_topology, step
from spikecast.tda import PersistenceDiagram, rips_persistence, wasserstein

SEEDS = (0, 1, 2, 3, 4)
CFG = RunConfig()


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")


@functools.lru_cache(maxsize=None)
def _series(seed, amplitude=0.0, period=1.0):
    _, z, _ = load_dataset(dataclasses.replace(CFG, seed=seed), TrendSpec(amplitude, period))
    return z


_obs_caches: dict = {}


@functools.lru_cache(maxsize=None)
def record(seed, model, amplitude=0.0, period=1.0, sampling="betweenness", neurons=500):
    """Summary and refit steps of one canonical run (cached across criteria)."""
    z = _series(seed, amplitude, period)
    pipe = dataclasses.replace(CFG.pipeline(), neurons=neurons)
    kind = {"wass": "wasserstein", "rmse": "rmse", "ar": "ar", "naive": "naive"}[model]
    spec = ModelSpec(model, kind, sampling=sampling)
    cache = _obs_caches.setdefault((amplitude, period, neurons), {})
    rec = run_model(z, spec, pipe, seed, CFG.window, cache, ar=OnlineAr(CFG.ar.order, CFG.ar.lr))
    s = rec.summary(CFG.epsilon)
    s["refit_steps"] = [int(t) for t in np.flatnonzero(rec.refit)]
    return s


def test_1_ordering_on_canonical_series(capsys):
    rows, wins, times = [], 0, []
    for seed in SEEDS:
        t0 = time.perf_counter()
        w, r, a = (record(seed, m)["avg_rmse"] for m in ("wass", "rmse", "ar"))
        times.append(time.perf_counter() - t0)
        ok = w < r < a
        wins += ok
        rows.append(f"s{seed}: {w:.4f}/{r:.4f}/{a:.4f}{'' if ok else '*'}")
    ok = wins >= 4 and max(times) < 600
    report(capsys, 1, ok, f"wass<rmse<ar on {wins}/5 seeds, max {max(times):.0f}s/seed; " + ", ".join(rows))
    assert ok


def test_2_betweenness_sampling_beats_random(capsys):
    wins, sampled, rand = 0, [], []
    for seed in SEEDS:
        b = record(seed, "wass")["avg_rmse"]
        r = record(seed, "wass", sampling="random")["avg_rmse"]
        sampled.append(b)
        rand.append(r)
        wins += b < r
    all200 = [record(s, "wass", sampling="all", neurons=200)["avg_rmse"] for s in SEEDS]
    top200 = [record(s, "wass", neurons=200)["avg_rmse"] for s in SEEDS]
    ok = wins >= 4
    report(
        capsys, 2, ok,
        f"sampled<random on {wins}/5 seeds; n=500 sampled {np.mean(sampled):.4f}±{np.std(sampled):.4f} "
        f"random {np.mean(rand):.4f}±{np.std(rand):.4f}; n=200 sampled {np.mean(top200):.4f}±{np.std(top200):.4f} "
        f"all {np.mean(all200):.4f}±{np.std(all200):.4f}",
    )
    assert ok


def test_3_rmse_non_increasing_with_trend_period(capsys):
    parts, ok = [], True
    for amp in (3.0, 5.0):
        means = [np.mean([record(s, "wass", amp, p)["avg_rmse"] for s in SEEDS]) for p in (100.0, 300.0, 500.0)]
        mono = means[0] >= means[1] >= means[2]
        ok &= mono
        parts.append(f"A={amp:g}: " + " -> ".join(f"{m:.4f}" for m in means) + ("" if mono else " (not monotone)"))
    report(capsys, 3, ok, "; ".join(parts))
    assert ok


def _pairs(arr):
    return sorted((float(b), float(d)) for b, d in np.asarray(arr).reshape(-1, 2))


def _same(got, want, tol=1e-9):
    if len(got) != len(want):
        return False
    return all(
        abs(b1 - b2) <= tol and ((math.isinf(d1) and math.isinf(d2)) or abs(d1 - d2) <= tol)
        for (b1, d1), (b2, d2) in zip(got, sorted(want))
    )


def _random_diagram(rng):
    pts = rng.uniform(0, 10, size=(rng.integers(0, 5), 2))
    return np.sort(pts, axis=1)


def test_4_tda_matches_oracles(capsys):
    rng = np.random.default_rng(4)
    rips_ok = 0
    for _ in range(100):
        pts = rng.normal(size=(rng.integers(1, 7), rng.integers(1, 4)))
        got, want = rips_persistence(pts), rips_oracle(pts)
        rips_ok += all(_same(_pairs(got[d]), want[d]) for d in (0, 1))
    wass_ok = 0
    for _ in range(200):
        a, b = _random_diagram(rng), _random_diagram(rng)
        q = float(rng.choice([1.0, 2.0]))
        got = wasserstein(PersistenceDiagram({1: a}), PersistenceDiagram({1: b}), q=q)
        wass_ok += abs(got - wasserstein_oracle(a, b, q)) <= 1e-9
    metric_ok = 0
    for _ in range(100):
        X, Y, Z = (PersistenceDiagram({1: _random_diagram(rng)}) for _ in range(3))
        dxy, dyx, dxz, dyz = wasserstein(X, Y), wasserstein(Y, X), wasserstein(X, Z), wasserstein(Y, Z)
        metric_ok += (
            wasserstein(X, X) <= 1e-12 and dxy >= 0 and abs(dxy - dyx) <= 1e-9 and dxz <= dxy + dyz + 1e-9
        )
    ok = rips_ok == 100 and wass_ok == 200 and metric_ok == 100
    report(capsys, 4, ok, f"rips {rips_ok}/100, wasserstein {wass_ok}/200, metric axioms {metric_ok}/100")
    assert ok


def test_5_brandes_matches_enumeration(capsys):
    rng = np.random.default_rng(5)
    good = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        adj = rng.random((n, n)) < rng.uniform(0.1, 0.7)
        np.fill_diagonal(adj, False)
        got = betweenness(adj, method="exact").scores
        want = np.array([float(f) for f in betweenness_oracle(adj)])
        good += bool(np.all(np.abs(got - want) <= 1e-9))
    report(capsys, 5, good == 100, f"{good}/100 random digraphs agree")
    assert good == 100


def test_6_neuron_model(capsys):
    lif, stdp = LifParams(), StdpParams()
    one = Topology(1, np.ones(1, bool), np.zeros((1, 1), bool), np.zeros((1, 1)), 1.0)
    state = RsnnState.initial(one, lif)
    state.v[:] = lif.v_rest + 9.0
    lif_err = 0.0
    for t in range(1, 300):
        step(state, one, 0.0, lif, stdp)
        lif_err = max(lif_err, abs(state.v[0] - (lif.v_rest + 9.0 * math.exp(-t / lif.tau_m))))

    stdp_err = 0.0
    mask = np.array([[False, True], [False, False]])
    pair = Topology(2, np.array([True, True]), mask, np.where(mask, 0.5, 0.0), 1.0)
    for dt in (-17, -5, -1, 1, 2, 5, 17):
        sched = {3: [0], 3 + dt: [1]} if dt > 0 else {3: [1], 3 - dt: [0]}
        st = RsnnState.initial(pair, lif)
        for t in range(4 + abs(dt)):
            cur = np.zeros(2)
            cur[sched.get(t, [])] = 100.0
            step(st, pair, cur, lif, stdp)
        stdp_err = max(stdp_err, abs(st.weights[0, 1] - (0.5 + stdp.dw(dt, 0.5))))

    rng = np.random.default_rng(6)
    n = 12
    fast = StdpParams(0.5, 0.5, 5.0, 5.0, 0.1, 0.6)
    lif0 = LifParams(refractory=0)
    topo = build_topology(n, p=1.0, seed=6, stdp=fast)
    st = RsnnState.initial(topo, lif0)
    pairings, bounded = 0, True
    while pairings < 100_000:
        _, spikes = step(st, topo, np.where(rng.random(n) < 0.3, 100.0, 0.0), lif0, fast)
        pairings += int(spikes.sum()) * (n - 1)
        w = st.weights[topo.plastic]
        bounded &= bool(w.min() >= fast.w_min and w.max() <= fast.w_max)
    ok = lif_err <= 1e-9 and stdp_err <= 1e-12 and bounded
    report(capsys, 6, ok, f"LIF max err {lif_err:.1e}, STDP max err {stdp_err:.1e}, weights bounded over {pairings} pairings: {bounded}")
    assert ok


def test_7_rde_efficacy_floor(capsys):
    t0 = time.perf_counter()
    n_train, n_test = 5000, 100
    obs, x = lorenz_channels(n_train + n_test + 1, seed=0, lags=(0,))
    inc = np.r_[0.0, np.diff(x)]
    model = fit(obs[:n_train], inc[:n_train], RdeConfig(), seed=0)
    pred = np.array([predict(model, obs[t - 1])[0][0] + x[t - 1] for t in range(n_train, n_train + n_test)])
    truth = x[n_train : n_train + n_test]
    rmse = float(np.sqrt(np.mean((pred - truth) ** 2)))
    naive = float(np.sqrt(np.mean((x[n_train - 1 : n_train + n_test - 1] - truth) ** 2)))
    elapsed = time.perf_counter() - t0
    ok = rmse <= 0.2 * naive and elapsed < 30
    report(capsys, 7, ok, f"RDE {rmse:.4g} vs naive {naive:.4g} (ratio {rmse / naive:.3f}), {elapsed:.1f}s")
    assert ok


def test_8_refit_after_each_mode_switch(capsys):
    hits, parts = 0, []
    for seed in SEEDS:
        fits = record(seed, "wass")["refit_steps"]
        caught = [any(b < f <= b + 60 for f in fits) for b in (300, 600, 900)]
        hits += all(caught)
        parts.append(f"s{seed}:" + "".join("y" if c else "n" for c in caught))
    ok = hits == 5
    report(capsys, 8, ok, f"refit within 60 steps of 300/600/900 on {hits}/5 seeds ({' '.join(parts)})")
    assert ok


def test_9_run_experiment_is_deterministic(tmp_path, capsys):
    names = ("record.csv", "summary.json", "manifest.json")
    blobs = []
    for k in range(2):
        cfg = dataclasses.replace(CFG, out=str(tmp_path / "run"))
        run_experiment(cfg)
        blobs.append([(tmp_path / "run" / n).read_bytes() for n in names])
    ok = blobs[0] == blobs[1]
    report(capsys, 9, ok, "two default runs byte-identical" if ok else "outputs differ between runs")
    assert ok
