"""Tests for the run-trace container and its CSV round trip."""

import numpy as np
import pytest

from gpbp.trace import Trace, read_csv, write_csv


def test_trace_accumulates_rows():
    t = Trace(["sweep", "max_change"])
    t.add_row(sweep=1, max_change=0.5)
    t.add_row(sweep=2, max_change=0.25)
    assert len(t) == 2
    assert t.column("sweep") == [1, 2]
    assert t.column("max_change") == [0.5, 0.25]
    assert t.last("max_change") == 0.25


def test_trace_fills_missing_cells_with_none():
    t = Trace(["sweep", "rmse_test"])
    t.add_row(sweep=1)
    t.add_row(sweep=2, rmse_test=0.125)
    assert t.column("rmse_test") == [None, 0.125]
    assert t.last("rmse_test") == 0.125


def test_trace_rows_follow_schema_order():
    t = Trace(["a", "b"])
    t.add_row(b=2, a=1)
    rows = list(t.rows())
    assert rows == [{"a": 1, "b": 2}]


def test_trace_unknown_column_rejected():
    t = Trace(["a"])
    t.add_row(a=1)
    with pytest.raises(KeyError):
        t.column("b")


def test_csv_round_trip_preserves_float_text(tmp_path):
    # repr-based formatting keeps every bit of the float across the trip.
    t = Trace(["sweep", "value"])
    rng = np.random.default_rng(0)
    originals = []
    for i in range(20):
        x = float(rng.standard_normal())
        originals.append(x)
        t.add_row(sweep=i, value=x)
    path = tmp_path / "trace.csv"
    t.to_csv(path, meta={"seed": 0, "mode": "gpbp"})
    meta, rows = read_csv(path)
    assert meta == {"seed": 0, "mode": "gpbp"}
    assert len(rows) == 20
    for row, x in zip(rows, originals):
        assert float(row["value"]) == x
        assert row["value"] == repr(x)


def test_csv_none_cells_become_empty_strings(tmp_path):
    t = Trace(["sweep", "rmse_test"])
    t.add_row(sweep=1)
    t.add_row(sweep=2, rmse_test=0.125)
    path = tmp_path / "trace.csv"
    t.to_csv(path)
    meta, rows = read_csv(path)
    assert meta == {}
    assert rows[0]["rmse_test"] == ""
    assert float(rows[1]["rmse_test"]) == 0.125


def test_csv_meta_survives_nested_values(tmp_path):
    path = tmp_path / "out.csv"
    meta = {"config": {"rank": 3, "lam": 0.5}, "tags": ["a", "b"]}
    write_csv(path, ["x"], [{"x": 1.0}], meta=meta)
    back, rows = read_csv(path)
    assert back == meta
    assert rows == [{"x": "1.0"}]
