"""Retrospective max-type CUSUM test for a single change in the mean."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import EPS_PD, bandwidth, long_run_from_block
from .critical_values import Kind
from .series import Segment, as_series

MIN_SEGMENT = 10


@dataclass(frozen=True)
class OfflineResult:
    """Outcome of the off-line test on one segment.

    ``argmax_index`` is the absolute index of the last observation before the
    estimated change.  Untestable segments (too short, or with a singular
    long-run covariance) carry ``testable=False`` and are never rejected.
    """

    statistic: float
    argmax_index: Optional[int]
    rejected: bool
    cv: float
    testable: bool = True

    @property
    def change_point(self) -> Optional[int]:
        return self.argmax_index if self.rejected else None


UNTESTABLE = OfflineResult(statistic=0.0, argmax_index=None, rejected=False, cv=float("nan"), testable=False)


def cusum_path(series, seg: Optional[Segment] = None) -> np.ndarray:
    """CUSUM process ``C_n = (S_n - n * mean) / sqrt(N)`` for ``n = 1..N``.

    Indices are relative to ``seg``; returns an ``(N, r)`` array whose last
    row is exactly zero.
    """
    series = as_series(series)
    seg = seg or series.full()
    x = series.values(seg)
    if x.shape[0] < 2:
        raise ValueError("CUSUM needs a segment of length >= 2")
    return _cusum(x)


def _cusum(x):
    n = x.shape[0]
    c = np.cumsum(x - x.mean(axis=0), axis=0) / np.sqrt(n)
    c[-1] = 0.0
    return c


def _statistic_1d(v):
    n = v.size
    c = v - v.mean()
    omega = c @ c / n
    if omega == 0.0:
        return None
    W = bandwidth(n)
    for w in range(1, W + 1):
        omega += 2.0 * (1.0 - w / (W + 1)) * (c[w:] @ c[: n - w]) / n
    if omega <= EPS_PD:
        return None
    s = np.cumsum(c)
    s[-1] = 0.0
    q = s * s / (n * omega)
    k = int(np.argmax(q))
    return float(q[k]), k + 1


def _statistic(x):
    """Return ``(max quadratic form, relative argmax)`` or ``None`` if untestable."""
    if x.shape[1] == 1:
        return _statistic_1d(x[:, 0])
    lr = long_run_from_block(x)
    if lr.degenerate:
        return None
    c = _cusum(x)
    if x.shape[1] == 1:
        omega = lr.matrix[0, 0]
        if omega <= EPS_PD:
            return None
        q = c[:, 0] ** 2 / omega
    else:
        vals, vecs = np.linalg.eigh(lr.matrix)
        if vals[0] <= EPS_PD:
            return None
        z = c @ vecs
        q = np.sum(z * z / vals, axis=1)
    k = int(np.argmax(q))  # first maximiser on ties
    return float(q[k]), k + 1


def offline_statistic(series, seg: Optional[Segment] = None) -> OfflineResult:
    """Max-type statistic ``max_n C_n' Omega^{-1} C_n`` without a decision.

    Segments shorter than :data:`MIN_SEGMENT` or with a singular Bartlett
    long-run covariance are reported as untestable.
    """
    series = as_series(series)
    seg = seg or series.full()
    x = series.values(seg)
    if x.shape[0] < MIN_SEGMENT:
        return UNTESTABLE
    out = _statistic(x)
    if out is None:
        return UNTESTABLE
    stat, k = out
    return OfflineResult(statistic=stat, argmax_index=seg.start - 1 + k, rejected=False, cv=float("nan"))


def offline_test(series, seg: Optional[Segment] = None, cv_provider=None, alpha: float = 0.05,
                 cv: Optional[float] = None) -> OfflineResult:
    """Test for a change in the mean of ``seg``.

    Parameters
    ----------
    cv_provider : callable
        ``cv_provider(kind, r=..., alpha=...)`` returning the critical value;
        ignored when ``cv`` is given.
    """
    series = as_series(series)
    res = offline_statistic(series, seg)
    if not res.testable:
        return res
    if cv is None:
        if cv_provider is None:
            raise ValueError("either cv or cv_provider is required")
        cv = cv_provider(Kind.OFFLINE, r=series.dim, alpha=alpha)
    return OfflineResult(
        statistic=res.statistic,
        argmax_index=res.argmax_index,
        rejected=res.statistic > cv,
        cv=cv,
    )


def test_block(x: np.ndarray, start: int, cv: float) -> Optional[int]:
    """Fast path used by the segmentation recursion.

    ``x`` holds rows ``start..start+len-1``; returns the absolute change
    index on rejection, otherwise ``None``.
    """
    if x.shape[0] < MIN_SEGMENT:
        return None
    out = _statistic(x)
    if out is None or not out[0] > cv:
        return None
    return start - 1 + out[1]


test_block.__test__ = False  # keep pytest from collecting it
