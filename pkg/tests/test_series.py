import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcpd.series import (
    ChangePoint,
    ParseError,
    Phase,
    RcpdConfig,
    Segment,
    TimeSeries,
    ingest_csv,
    sample_mean,
    to_csv,
)


@pytest.mark.parametrize("data, seg, expected", [
    ([1, 1, 1, 1], (1, 4), 1.0),
    ([0, 0, 0, 3, 3, 3], (4, 6), 3.0),
    ([0, 1, 2, 3], (2, 4), 2.0),
])
def test_sample_mean_examples(data, seg, expected):
    assert sample_mean(TimeSeries(data), Segment(*seg))[0] == pytest.approx(expected)


def test_sample_mean_out_of_range():
    with pytest.raises(IndexError):
        sample_mean(TimeSeries([1, 2, 3]), Segment(2, 4))


def test_segment_rejects_inverted_range():
    with pytest.raises(ValueError):
        Segment(3, 2)
    with pytest.raises(ValueError):
        Segment(0, 2)
    assert len(Segment(2, 5)) == 4


def test_timeseries_rejects_non_finite_and_is_read_only():
    with pytest.raises(ValueError):
        TimeSeries([1.0, math.nan])
    ts = TimeSeries([[1, 2], [3, 4]])
    assert (ts.n, ts.dim) == (2, 2)
    with pytest.raises(ValueError):
        ts.data[0, 0] = 5


def test_ingest_plain_column():
    ts = ingest_csv(b"1\n2\n3\n")
    assert (ts.n, ts.dim) == (3, 1)
    assert ts.column(1).tolist() == [1.0, 2.0, 3.0]


def test_ingest_header_is_skipped():
    ts = ingest_csv(b"v,likes\n1,0\n2,5\n")
    assert (ts.n, ts.dim) == (2, 2)
    assert ts.data.tolist() == [[1.0, 0.0], [2.0, 5.0]]


def test_ingest_invalid_token_names_row():
    with pytest.raises(ParseError) as err:
        ingest_csv(b"1\nx\n")
    assert err.value.row == 2


@pytest.mark.parametrize("raw, row, col", [
    (b"1,2\n3\n", 2, None),
    (b"1\nnan\n", 2, 1),
    (b"1,2\n3,inf\n", 2, 2),
    (b"a\n1\n,\n2\n", 3, None),
])
def test_ingest_errors(raw, row, col):
    with pytest.raises(ParseError) as err:
        ingest_csv(raw)
    assert err.value.row == row
    if col is not None:
        assert err.value.column == col


def test_ingest_empty():
    with pytest.raises(ParseError):
        ingest_csv(b"")
    with pytest.raises(ParseError):
        ingest_csv(b"header\n")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-1e9, 1e9, allow_nan=False), min_size=2, max_size=2), min_size=1, max_size=30))
def test_csv_round_trip(rows):
    ts = TimeSeries(rows)
    assert np.array_equal(ingest_csv(to_csv(ts)).data, ts.data)
    assert np.array_equal(ingest_csv(to_csv(ts, header=["a", "b"])).data, ts.data)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.data())
def test_mean_additive_over_partitions(values, data):
    ts = TimeSeries(values)
    n = ts.n
    cuts = sorted(data.draw(st.sets(st.integers(1, n - 1), max_size=5)))
    bounds = [0, *cuts, n]
    weighted = sum((b - a) * sample_mean(ts, Segment(a + 1, b))[0] for a, b in zip(bounds, bounds[1:])) / n
    assert weighted == pytest.approx(sample_mean(ts)[0], abs=1e-9)


def test_config_validation():
    RcpdConfig()
    for bad in [dict(alpha=0), dict(alpha=1), dict(gamma=0.5), dict(gamma=-0.1), dict(l=0), dict(d=-1),
                dict(u=1), dict(p1=12, p2=12), dict(h=-1)]:
        with pytest.raises(ValueError):
            RcpdConfig(**bad)


def test_change_point_invariants():
    with pytest.raises(ValueError):
        ChangePoint(index=0)
    with pytest.raises(ValueError):
        ChangePoint(index=5, phase=Phase.ONLINE)
    assert ChangePoint(index=5, detection_lag=1, phase=Phase.ONLINE).detection_lag == 1
