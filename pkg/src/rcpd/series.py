"""Time-series container, segments and the shared configuration types.

All public indices are 1-based and inclusive, matching the usual notation
``X_1, ..., X_N``.  The only conversion to 0-based storage happens in
:meth:`TimeSeries.values`.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np


class ParseError(ValueError):
    """Raised when CSV input cannot be turned into a :class:`TimeSeries`."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class Direction(enum.Enum):
    UP = "up"
    DOWN = "down"


class Phase(enum.Enum):
    OFFLINE = "offline"
    ONLINE = "online"


class Variant(enum.Enum):
    STANDARD = "standard"
    RATIO = "ratio"


class Trend(enum.Enum):
    TS = "ts"
    MACD = "macd"


@dataclass(frozen=True)
class Segment:
    """Closed index range ``[start, end]`` (1-based)."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 1 or self.end < self.start:
            raise ValueError(f"invalid segment [{self.start}, {self.end}]")

    def __len__(self):
        return self.end - self.start + 1

    def check_within(self, n):
        if self.end > n:
            raise IndexError(f"segment [{self.start}, {self.end}] exceeds series length {n}")


class TimeSeries:
    """Immutable ``N x r`` array of finite observations.

    Parameters
    ----------
    data : array_like
        One row per time instance.  A 1-D input is treated as ``r = 1``.
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("time series data must be 1-D or 2-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("time series needs at least one row and one column")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"non-finite value at row {bad[0] + 1}, column {bad[1] + 1}")
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def dim(self) -> int:
        return self._data.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"TimeSeries(n={self.n}, dim={self.dim})"

    def full(self) -> Segment:
        return Segment(1, self.n)

    def values(self, seg: Optional[Segment] = None) -> np.ndarray:
        """Rows ``seg.start..seg.end`` as a read-only ``(len, r)`` view."""
        if seg is None:
            return self._data
        seg.check_within(self.n)
        return self._data[seg.start - 1 : seg.end]

    def column(self, j: int = 1) -> np.ndarray:
        """Dimension ``j`` (1-based) as a 1-D view."""
        return self._data[:, j - 1]


SeriesLike = Union[TimeSeries, np.ndarray]


def as_series(x) -> TimeSeries:
    return x if isinstance(x, TimeSeries) else TimeSeries(x)


def sample_mean(series: TimeSeries, seg: Optional[Segment] = None) -> np.ndarray:
    """Per-dimension arithmetic mean over ``seg`` (whole series by default)."""
    return series.values(seg).mean(axis=0)


def _parse_float(token):
    try:
        value = float(token)
    except ValueError:
        return None
    return value


def ingest_csv(raw: Union[bytes, str]) -> TimeSeries:
    """Parse comma-separated numeric rows into a :class:`TimeSeries`.

    A single header row is skipped when its first row is not entirely
    numeric.  Missing, non-numeric and non-finite cells are rejected rather
    than imputed.
    """
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    rows = [r for r in csv.reader(io.StringIO(text))]
    # drop trailing blank lines but keep interior ones so row numbers stay honest
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError("empty input")

    first = [c.strip() for c in rows[0]]
    header = any(_parse_float(c) is None for c in first)
    start = 1 if header else 0
    width = len(first)
    values = []
    for i in range(start, len(rows)):
        row = [c.strip() for c in rows[i]]
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", row=i + 1)
        parsed = []
        for j, cell in enumerate(row):
            v = _parse_float(cell)
            if v is None:
                raise ParseError(f"invalid number {cell!r}", row=i + 1, column=j + 1)
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cell!r}", row=i + 1, column=j + 1)
            parsed.append(v)
        values.append(parsed)
    if not values:
        raise ParseError("no data rows")
    return TimeSeries(np.array(values, dtype=float))


def to_csv(series: TimeSeries, header=None) -> str:
    """Render a series as CSV; values are written with ``repr`` precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in series.data:
        writer.writerow([repr(float(v)) for v in row])
    return out.getvalue()


@dataclass
class ChangePoint:
    """A detected change in the mean.

    ``magnitude`` is the signed relative change of the dimension-1 mean
    across the change (``0.2`` for a 20% increase); ``inf`` when the
    pre-change mean is zero.  ``direction`` is ``None`` when it is unknown
    or not yet decided.
    """

    index: int
    direction: Optional[Direction] = None
    magnitude: float = math.nan
    detection_lag: Optional[int] = None
    phase: Phase = Phase.OFFLINE

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("change-point index is 1-based")
        if self.phase is Phase.ONLINE and (self.detection_lag is None or self.detection_lag < 1):
            raise ValueError("on-line change points carry a detection lag >= 1")


@dataclass(frozen=True)
class RcpdConfig:
    """Parameters of the real-time detector.

    Attributes
    ----------
    alpha : float
        Significance level of both the off-line and the on-line tests.
    gamma : float
        Sensitivity of the sequential weight function, in ``[0, 0.5)``.
    l : int
        Monitoring window length.
    d : int
        Quiet distance after a detection before monitoring restarts.
    ms0 : int
        Index at which the first training period ends.
    u : int
        Maximum training length when no off-line change is found.
    variant, trend : Variant, Trend
        Sequential statistic and direction indicator.
    h : int
        Number of post-change samples summed by the MACD indicator.
    p1, p2, p3 : int
        EMA lags of the MACD indicator, ``p1 < p2 < p3``.
    """

    alpha: float = 0.05
    gamma: float = 0.25
    l: int = 50
    d: int = 50
    ms0: int = 200
    u: int = 500
    variant: Variant = Variant.STANDARD
    trend: Trend = Trend.TS
    h: int = 0
    p1: int = 9
    p2: int = 12
    p3: int = 26
    validate: bool = field(default=True)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.gamma < 0.5:
            raise ValueError(f"gamma must lie in [0, 0.5), got {self.gamma}")
        if self.l < 1:
            raise ValueError("l must be >= 1")
        if self.d < 0:
            raise ValueError("d must be >= 0")
        if self.ms0 < 1:
            raise ValueError("ms0 must be >= 1")
        if self.u < 2:
            raise ValueError("u must be >= 2")
        if self.h < 0:
            raise ValueError("h must be >= 0")
        if not (1 <= self.p1 < self.p2 < self.p3):
            raise ValueError("EMA lags must satisfy 1 <= p1 < p2 < p3")
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "trend", Trend(self.trend))
