"""Direction of a detected change: sign of the sequential detector or MACD."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .series import Direction


def ti_ts(e_first: float) -> Direction:
    """``UP`` when the detector is positive, ``DOWN`` otherwise (ties go down)."""
    e = float(e_first)
    if not math.isfinite(e):
        raise ValueError(f"non-finite detector value {e_first!r}")
    return Direction.UP if e > 0 else Direction.DOWN


def ema(x, p: int) -> np.ndarray:
    """Exponential moving average with lag ``p``, started at ``EMA(1) = X_1``.

    ``EMA(n) = 2/(p+1) X_n + (p-1)/(p+1) EMA(n-1)``.
    """
    x = np.asarray(x, dtype=float)
    if p < 1:
        raise ValueError("EMA lag must be >= 1")
    if x.ndim != 1 or x.size == 0:
        raise ValueError("EMA expects a non-empty 1-D series")
    a = 2.0 / (p + 1)
    b = (p - 1) / (p + 1)
    # y[0] = x[0]: initial state chosen so the first output equals the input
    y, _ = lfilter([a], [1.0, -b], x, zi=[b * x[0]])
    return y


def macd(x, p2: int = 12, p3: int = 26) -> np.ndarray:
    return ema(x, p2) - ema(x, p3)


def ti_f_series(x, p1: int = 9, p2: int = 12, p3: int = 26) -> np.ndarray:
    """Indicator series ``MACD(n) - EMA_{p1}(MACD)(n)``."""
    if not p1 < p2 < p3:
        raise ValueError("EMA lags must satisfy p1 < p2 < p3")
    x = np.asarray(x, dtype=float)
    # both EMAs start at X_1, which cancels in MACD; centring keeps a
    # constant input at exactly zero
    m = macd(x - x[0], p2, p3)
    return m - ema(m, p1)


def ti_f_value(x, k: int, h: int = 0, p1: int = 9, p2: int = 12, p3: int = 26) -> float:
    """Sum of the indicator over ``n = k..k+h`` (1-based)."""
    x = np.asarray(x, dtype=float)
    if k < 1 or h < 0:
        raise ValueError("need k >= 1 and h >= 0")
    if k + h > x.size:
        raise IndexError(f"window [{k}, {k + h}] overruns series of length {x.size}")
    ti = ti_f_series(x[: k + h], p1, p2, p3)
    return float(ti[k - 1 : k + h].sum())


def ti_f(x, k: int, h: int = 0, p1: int = 9, p2: int = 12, p3: int = 26,
         fallback: Optional[Direction] = None) -> Optional[Direction]:
    """MACD direction at ``k`` summed over ``h`` following samples.

    Returns ``fallback`` when the summed indicator is exactly zero.
    """
    s = ti_f_value(x, k, h, p1, p2, p3)
    if s > 0:
        return Direction.UP
    if s < 0:
        return Direction.DOWN
    return fallback
