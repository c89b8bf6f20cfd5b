import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import rips_oracle, wasserstein_oracle
from spikecast.tda import (
    PersistenceDiagram,
    TdaConfig,
    diagram_distance,
    enclosing_radius,
    rips_persistence,
    rolling_wasserstein,
    sliding_window_cloud,
    wasserstein,
)


def as_multiset(arr):
    return sorted((float(b), float(d)) for b, d in np.asarray(arr).reshape(-1, 2))


def assert_same_pairs(got, want, tol=1e-9):
    got, want = as_multiset(got), sorted(want)
    assert len(got) == len(want)
    for (b1, d1), (b2, d2) in zip(got, want):
        assert abs(b1 - b2) <= tol
        assert (math.isinf(d1) and math.isinf(d2)) or abs(d1 - d2) <= tol


clouds = st.integers(1, 6).flatmap(
    lambda n: st.integers(1, 3).flatmap(
        lambda d: st.lists(
            st.lists(st.floats(-10, 10, allow_nan=False), min_size=d, max_size=d), min_size=n, max_size=n
        )
    )
)

points = st.tuples(st.floats(0, 10), st.floats(0, 10)).map(lambda p: (min(p), max(p)))
diagrams = st.lists(points, min_size=0, max_size=4)


def dgm(pairs):
    return PersistenceDiagram({1: np.array(pairs, dtype=float).reshape(-1, 2)})


def test_sliding_window_examples():
    np.testing.assert_array_equal(sliding_window_cloud([1, 2, 3, 4], 4, 2, 1), [[2, 1], [3, 2], [4, 3]])
    np.testing.assert_array_equal(sliding_window_cloud([5, 6, 7], 3, 1, 1)[:, 0], [5, 6, 7])
    period = 40
    x = np.sin(2 * np.pi * np.arange(60) / period)
    cloud = sliding_window_cloud(x, period + 10, 2, period // 4)
    assert np.max(np.abs(np.hypot(cloud[:, 0], cloud[:, 1]) - 1)) < 1e-6
    with pytest.raises(ValueError):
        sliding_window_cloud([1.0, 2.0], 5, 1, 1)


def test_rips_examples():
    d = rips_persistence([[0.0], [1.0], [2.0]])
    assert_same_pairs(d[0], [(0, 1), (0, 1), (0, math.inf)])
    assert d[1].shape == (0, 2)
    square = [[0, 0], [1, 0], [1, 1], [0, 1]]
    assert_same_pairs(rips_persistence(square, max_scale=2)[1], [(1, math.sqrt(2))])
    single = rips_persistence([[3.0, 4.0]])
    assert_same_pairs(single[0], [(0, math.inf)])
    assert single[1].shape == (0, 2)


@settings(max_examples=100, deadline=None)
@given(clouds)
def test_rips_matches_betti_oracle(cloud):
    pts = np.array(cloud)
    got = rips_persistence(pts, max_scale=math.inf)
    want = rips_oracle(pts)
    for dim in (0, 1):
        assert_same_pairs(got[dim], want[dim])


@settings(max_examples=50, deadline=None)
@given(clouds)
def test_rips_matches_oracle_at_enclosing_radius(cloud):
    pts = np.array(cloud)
    r = enclosing_radius(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)))
    got = rips_persistence(pts)
    want = rips_oracle(pts, max_scale=r)
    for dim in (0, 1):
        assert_same_pairs(got[dim], want[dim])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 25))
def test_rips_structural_invariants(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 2))
    d = rips_persistence(pts)
    assert d[0].shape[0] == n
    for dim in (0, 1):
        assert np.all(d[dim][:, 1] >= d[dim][:, 0])
        assert np.all(d[dim][:, 0] >= 0)
    perm = rng.permutation(n)
    e = rips_persistence(pts[perm])
    for dim in (0, 1):
        assert_same_pairs(e[dim], as_multiset(d[dim]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.1))
def test_h0_stability(seed, eps):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(10, 2))
    jitter = rng.uniform(-1, 1, size=pts.shape)
    jitter *= eps / np.linalg.norm(jitter, axis=1, keepdims=True)
    a = np.sort(rips_persistence(pts, math.inf).finite(0)[:, 1])
    b = np.sort(rips_persistence(pts + jitter, math.inf).finite(0)[:, 1])
    assert a.shape == b.shape
    assert np.max(np.abs(a - b)) <= 2 * eps + 1e-12


def test_wasserstein_examples():
    x = dgm([(0, 2), (1, 3)])
    assert wasserstein(x, x) == 0
    assert wasserstein(dgm([(0, 2)]), dgm([])) == 1.0
    assert wasserstein(dgm([]), dgm([])) == 0.0


@settings(max_examples=200, deadline=None)
@given(diagrams, diagrams, st.sampled_from([1.0, 2.0]))
def test_wasserstein_matches_enumeration(a, b, q):
    got = wasserstein(dgm(a), dgm(b), q=q)
    assert abs(got - wasserstein_oracle(a, b, q)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(diagrams, diagrams, diagrams)
def test_wasserstein_metric_axioms(a, b, c):
    A, B, C = dgm(a), dgm(b), dgm(c)
    assert wasserstein(A, A) <= 1e-12
    assert abs(wasserstein(A, B) - wasserstein(B, A)) <= 1e-9
    assert wasserstein(A, C) <= wasserstein(A, B) + wasserstein(B, C) + 1e-9


def test_essential_classes():
    a = PersistenceDiagram({1: np.array([[0, 1], [2, math.inf]])})
    b = PersistenceDiagram({1: np.array([[0, 1]])})
    assert wasserstein(a, b) == 0
    assert wasserstein(a, b, include_essential=True) == math.inf
    c = PersistenceDiagram({1: np.array([[0, 1], [2.5, math.inf]])})
    assert wasserstein(a, c, include_essential=True) == 0.5
    with pytest.raises(ValueError):
        PersistenceDiagram({0: np.array([[2.0, 1.0]])})
    with pytest.raises(ValueError):
        wasserstein(a, b, q=0.5)


def test_rolling_wasserstein_orders_shapes():
    t = np.arange(30)
    sine = np.sin(2 * np.pi * t / 15)
    assert rolling_wasserstein(sine, sine) == 0
    near = rolling_wasserstein(sine, 1.05 * sine)
    noise = np.random.default_rng(0).normal(0, sine.std(), 30)
    far = rolling_wasserstein(sine, noise)
    assert near < far
    assert rolling_wasserstein(np.r_[np.zeros(10), sine], sine) == 0.0


def test_diagram_distance_falls_back_to_h0():
    cfg = TdaConfig()
    a = PersistenceDiagram({0: np.array([[0, 1], [0, math.inf]]), 1: np.zeros((0, 2))})
    b = PersistenceDiagram({0: np.array([[0, 3], [0, math.inf]]), 1: np.zeros((0, 2))})
    assert diagram_distance(a, b, cfg) == 2.0
    with pytest.raises(ValueError):
        TdaConfig(window=4, embed_dim=3, delay=2)
