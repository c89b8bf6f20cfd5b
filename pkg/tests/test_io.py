import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikecast.codec import SpikeRaster
from spikecast.dynamics import TimeSeries
from spikecast.io import (
    DatasetError,
    load_csv,
    read_diagram,
    read_raster,
    read_topology_rows,
    write_diagram,
    write_raster,
    write_scores,
    write_series,
    write_topology,
)
from spikecast.rsnn import build_topology
from spikecast.tda import rips_persistence


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_simple(tmp_path):
    s = load_csv(write(tmp_path, "t,value\n0,1.5\n1,2.5\n"))
    np.testing.assert_array_equal(s.values, [1.5, 2.5])
    assert s.origin == "file" and s.meta["timestamps"] == [0.0, 1.0]


def test_error_names_row(tmp_path):
    with pytest.raises(DatasetError, match="row 3"):
        load_csv(write(tmp_path, "t,value\n0,1.5\n1,abc\n2,3\n"))
    with pytest.raises(DatasetError, match="row 2"):
        load_csv(write(tmp_path, "t,value\n0,\n"))
    with pytest.raises(DatasetError, match="row 4"):
        load_csv(write(tmp_path, "t,value\n0,1\n1,2\n1,3\n"))
    with pytest.raises(DatasetError, match="row 2"):
        load_csv(write(tmp_path, "t,value\n0,nan\n"))
    with pytest.raises(DatasetError, match="missing column"):
        load_csv(write(tmp_path, "t,v\n0,1\n"))
    with pytest.raises(DatasetError):
        load_csv(write(tmp_path, "t,value\n"))
    with pytest.raises(DatasetError):
        load_csv(write(tmp_path, ""))


def test_yahoo_style_columns(tmp_path):
    s = load_csv(write(tmp_path, "timestamp,value,is_anomaly\n1,10,0\n2,11,1\n3,9.5,0\n"))
    np.testing.assert_array_equal(s.values, [10, 11, 9.5])
    assert s.meta["columns"] == {"is_anomaly": ["0", "1", "0"]}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=50))
def test_series_round_trip_keeps_every_row(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("s") / "s.csv"
    write_series(p, TimeSeries(np.array(values)))
    back = load_csv(p)
    assert back.values.tolist() == [float(v) for v in values]
    assert p.read_bytes().endswith(b"\n") and b"\r" not in p.read_bytes()


def test_raster_round_trip(tmp_path):
    r = SpikeRaster([np.array([0, 4]), np.array([], dtype=int), np.array([2])], 6)
    write_raster(tmp_path / "r.csv", r)
    assert (tmp_path / "r.csv").read_text() == "channel,step\n0,0\n0,4\n2,2\n"
    back = read_raster(tmp_path / "r.csv", n_channels=3, horizon=6)
    np.testing.assert_array_equal(back.to_dense(), r.to_dense())


def test_topology_and_scores(tmp_path):
    t = build_topology(10, 0.3, seed=0)
    write_topology(tmp_path / "t.csv", t)
    rows = read_topology_rows(tmp_path / "t.csv")
    assert len(rows) == t.n_synapses
    for i, j, w, p in rows:
        assert t.mask[i, j] and p == bool(t.plastic[i, j])
        assert w == pytest.approx(t.sign[i] * t.weights[i, j], abs=0)
    write_scores(tmp_path / "s.csv", np.array([0.0, 1.5]))
    assert (tmp_path / "s.csv").read_text() == "node,score\n0,0.0\n1,1.5\n"


def test_diagram_round_trip(tmp_path):
    d = rips_persistence(np.random.default_rng(0).normal(size=(8, 2)))
    write_diagram(tmp_path / "d.csv", d)
    back = read_diagram(tmp_path / "d.csv")
    for dim in (0, 1):
        np.testing.assert_array_equal(back[dim], d[dim])
    assert math.isinf(back.essential(0)[0, 1])
