"""CSV and JSON readers/writers for series, rasters, topologies, scores,
diagrams and run records. CSV files are UTF-8 with LF line endings."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .codec import SpikeRaster
from .dynamics import TimeSeries
from .tda import PersistenceDiagram


class DatasetError(ValueError):
    pass


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    return [h.strip() for h in rows[0]], rows[1:]


def write_series(path, series: TimeSeries) -> None:
    _write(path, ["t", "value"], ([i, _fmt(v)] for i, v in enumerate(series.values)))


def load_csv(path, column: str = "value", time_column: str | None = None) -> TimeSeries:
    """Read one numeric column; the first column is the timestamp unless named.

    Any other columns (e.g. an ``is_anomaly`` label) are kept in
    ``meta['columns']``. Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    header, rows = _read(path)
    if column not in header:
        raise DatasetError(f"{path}: missing column {column!r} (have {header})")
    ci = header.index(column)
    ti = header.index(time_column) if time_column else 0
    if ti == ci:
        ti = None
    values = []
    stamps = []
    extra = {h: [] for k, h in enumerate(header) if k not in (ci, ti)}
    for r, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            raise DatasetError(f"{path}: row {r} is empty")
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        cell = row[ci].strip()
        if cell == "":
            raise DatasetError(f"{path}: row {r} has a missing value")
        try:
            v = float(cell)
        except ValueError:
            raise DatasetError(f"{path}: row {r} has non-numeric value {cell!r}") from None
        if not math.isfinite(v):
            raise DatasetError(f"{path}: row {r} has non-finite value {cell!r}")
        values.append(v)
        if ti is not None:
            try:
                stamp = float(row[ti])
            except ValueError:
                raise DatasetError(f"{path}: row {r} has non-numeric timestamp {row[ti]!r}") from None
            if stamps and stamp <= stamps[-1]:
                raise DatasetError(f"{path}: row {r} timestamp is not strictly increasing")
            stamps.append(stamp)
        for k, h in enumerate(header):
            if h in extra:
                extra[h].append(row[k])
    if not values:
        raise DatasetError(f"{path}: no data rows")
    meta = {"path": str(path), "column": column, "timestamps": stamps, "columns": extra}
    return TimeSeries(np.array(values), origin="file", meta=meta)


def write_raster(path, raster: SpikeRaster) -> None:
    rows = ([c, int(s)] for c, ev in enumerate(raster.events) for s in ev)
    _write(path, ["channel", "step"], rows)


def read_raster(path, n_channels: int | None = None, horizon: int | None = None) -> SpikeRaster:
    _, rows = _read(path)
    pairs = [(int(c), int(s)) for c, s in rows]
    n = n_channels if n_channels is not None else (max((c for c, _ in pairs), default=-1) + 1)
    events = [[] for _ in range(n)]
    for c, s in sorted(pairs):
        events[c].append(s)
    h = horizon if horizon is not None else (max((s for _, s in pairs), default=-1) + 1)
    return SpikeRaster([np.array(e, dtype=np.int64) for e in events], h)


def write_topology(path, topology, weights=None) -> None:
    rows = ([i, j, _fmt(w), int(p)] for i, j, w, p in topology.synapses(weights))
    _write(path, ["pre", "post", "weight", "plastic"], rows)


def read_topology_rows(path) -> list[tuple[int, int, float, bool]]:
    _, rows = _read(path)
    return [(int(a), int(b), float(w), bool(int(p))) for a, b, w, p in rows]


def write_scores(path, scores) -> None:
    _write(path, ["node", "score"], ([i, _fmt(s)] for i, s in enumerate(np.asarray(scores))))


def write_diagram(path, diagram: PersistenceDiagram) -> None:
    _write(path, ["dim", "birth", "death"], ([d, _fmt(b), _fmt(e)] for d, b, e in diagram.rows()))


def read_diagram(path) -> PersistenceDiagram:
    _, rows = _read(path)
    pairs: dict[int, list] = {}
    for d, b, e in rows:
        pairs.setdefault(int(d), []).append((float(b), float(e)))
    return PersistenceDiagram({d: np.array(v) for d, v in pairs.items()})


RECORD_HEADER = ["t", "observed", "predicted", "rmse", "d_w", "refit"]


def write_record(path, record, scale: float = 1.0, offset: float = 0.0) -> None:
    """Stream a RunRecord; values are mapped back with ``x * scale + offset``.

    Loss columns are multiplied by ``scale`` only.
    """
    rows = (
        [
            t,
            _fmt(record.observed[t] * scale + offset),
            _fmt(record.predicted[t] * scale + offset),
            _fmt(record.rolling_rmse[t] * scale),
            _fmt(record.rolling_dw[t] * scale),
            int(record.refit[t]),
        ]
        for t in range(record.observed.shape[0])
    )
    _write(path, RECORD_HEADER, rows)


def read_record(path) -> dict[str, np.ndarray]:
    header, rows = _read(path)
    cols = list(zip(*rows)) if rows else [[] for _ in header]
    return {h: np.array([float(v) for v in c]) for h, c in zip(header, cols)}


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
