"""Metrics for change-point outputs: DTW, Hurst, ACF, direction and size of changes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence

import numpy as np

from .series import Direction

MAGNITUDE_THRESHOLDS = (0.10, 0.15, 0.25, 0.50)
GAP_QUANTILES = (0.05, 0.10, 0.50, 0.90, 0.95)


class DtwResult(NamedTuple):
    distance: float
    defined: bool


def dtw(a: Sequence[float], b: Sequence[float]) -> DtwResult:
    """Dynamic time warping with cost ``|a_i - b_j|`` and no window.

    Two empty inputs are at distance 0; one empty input gives
    ``(inf, defined=False)``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 and b.size == 0:
        return DtwResult(0.0, True)
    if a.size == 0 or b.size == 0:
        return DtwResult(math.inf, False)
    cost = np.abs(a[:, None] - b[None, :])
    acc = np.full((a.size + 1, b.size + 1), math.inf)
    acc[0, 0] = 0.0
    for i in range(1, a.size + 1):
        prev, cur = acc[i - 1], acc[i]
        row = cost[i - 1]
        for j in range(1, b.size + 1):
            cur[j] = row[j - 1] + min(prev[j - 1], prev[j], cur[j - 1])
    return DtwResult(float(acc[-1, -1]), True)


def dtw_distance(a, b) -> float:
    return dtw(a, b).distance


class HurstError(ValueError):
    pass


def hurst_second_derivative(x) -> float:
    """Two-scale quadratic-variation Hurst estimate, clamped to ``[0, 1]``.

    ``V(a)`` is the mean squared second difference at step ``a``;
    the estimate is ``0.5 * log2(V(2) / V(1))``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 20:
        raise ValueError("Hurst estimation needs at least 20 observations")
    v1 = _quadratic_variation(x, 1)
    v2 = _quadratic_variation(x, 2)
    if v1 == 0.0:
        raise HurstError("zero second-difference variation; Hurst exponent undefined")
    if v2 == 0.0:
        return 0.0
    return float(min(1.0, max(0.0, 0.5 * math.log2(v2 / v1))))


def _quadratic_variation(x, a):
    d = x[2 * a :] - 2.0 * x[a:-a] + x[: -2 * a]
    return float(np.mean(d * d))


@dataclass(frozen=True)
class AcfSummary:
    rho: np.ndarray
    band: float
    last_significant_lag: int


def acf(x, max_lag: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must lie in [0, {n})")
    c = x - x.mean()
    var = float(c @ c)
    if var == 0.0:
        raise ValueError("zero variance; autocorrelation undefined")
    return np.array([c[k:] @ c[: n - k] for k in range(max_lag + 1)]) / var


def acf_summary(x, max_lag: int = 50) -> AcfSummary:
    """Sample ACF with the ``1.96/sqrt(n)`` band.

    The last significant lag is the end of the leading run of lags
    ``1, 2, ...`` whose ``|rho|`` exceeds the band (0 if lag 1 is inside it),
    so isolated chance exceedances at far lags are not counted.
    """
    x = np.asarray(x, dtype=float).ravel()
    rho = acf(x, max_lag)
    band = 1.96 / math.sqrt(x.size)
    last = 0
    for k in range(1, max_lag + 1):
        if abs(rho[k]) > band:
            last = k
        else:
            break
    return AcfSummary(rho, band, last)


def _flanks(x, cps):
    """Pairs of (before, after) segments around each change.

    A change ``k`` is the last pre-change index, so the segments are
    ``(prev, k]`` and ``(k, next]`` with the series ends as outer bounds.
    """
    x = np.asarray(x, dtype=float).ravel()
    cps = [int(c) for c in cps]
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("change points must be strictly increasing")
    if cps and not (1 <= cps[0] and cps[-1] < x.size):
        raise ValueError("change points must lie in [1, N)")
    bounds = [0, *cps, x.size]
    return [(x[bounds[i - 1] : bounds[i]], x[bounds[i] : bounds[i + 1]]) for i in range(1, len(bounds) - 1)]


def direction_baseline(x, cps) -> List[Direction]:
    """Direction implied by the averages of the segments flanking each change (ties go down)."""
    return [Direction.UP if before.mean() < after.mean() else Direction.DOWN for before, after in _flanks(x, cps)]


def change_magnitudes(x, cps) -> List[float]:
    """``|mean_after - mean_before| / |mean_before|``; ``inf`` when the earlier mean is 0."""
    out = []
    for before, after in _flanks(x, cps):
        mb, ma = before.mean(), after.mean()
        diff = abs(ma - mb)
        out.append(diff / abs(mb) if mb != 0 else (math.inf if diff else 0.0))
    return out


def magnitude_percentiles(x, cps, thresholds: Sequence[float] = MAGNITUDE_THRESHOLDS) -> Dict[float, float]:
    """Fraction of changes whose relative magnitude exceeds each threshold."""
    mags = np.asarray(change_magnitudes(x, cps))
    if mags.size == 0:
        return {float(t): 0.0 for t in thresholds}
    return {float(t): float(np.mean(mags > t)) for t in thresholds}


@dataclass(frozen=True)
class InterimTimes:
    gaps: List[int]
    quantiles: Dict[float, float]


def interim_times(cps, quantiles: Sequence[float] = GAP_QUANTILES) -> InterimTimes:
    cps = [int(c) for c in cps]
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError("change points must be sorted")
    gaps = [b - a for a, b in zip(cps, cps[1:])]
    if not gaps:
        return InterimTimes([], {})
    qs = np.quantile(np.asarray(gaps, dtype=float), list(quantiles))
    return InterimTimes(gaps, {float(q): float(v) for q, v in zip(quantiles, qs)})


def agreement(predicted: Sequence[Direction], reference: Sequence[Direction]) -> float:
    """Share of positions where two direction lists agree (nan when empty)."""
    if len(predicted) != len(reference):
        raise ValueError("direction lists differ in length")
    if not predicted:
        return math.nan
    return sum(p is r for p, r in zip(predicted, reference)) / len(predicted)
