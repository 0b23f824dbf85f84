"""Autocovariances, the Bartlett long-run covariance and ``M^{-1/2}``."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from .series import Segment, TimeSeries

EPS_PD = 1e-12


class SingularMatrixError(ValueError):
    """Matrix is not (numerically) positive definite."""

    def __init__(self, eigenvalue):
        self.eigenvalue = float(eigenvalue)
        super().__init__(f"matrix is not positive definite: eigenvalue {self.eigenvalue:.3g}")


class LongRunCovariance(NamedTuple):
    matrix: np.ndarray
    bandwidth: int
    degenerate: bool


def _block(series, seg):
    if isinstance(series, TimeSeries):
        return series.values(seg)
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if seg is not None:
        x = x[seg.start - 1 : seg.end]
    return x


def _autocov(centered: np.ndarray, w: int) -> np.ndarray:
    n = centered.shape[0]
    return centered[w:].T @ centered[: n - w] / n


def autocovariance(series, seg: Optional[Segment] = None, w: int = 0) -> np.ndarray:
    """Empirical lag-``w`` autocovariance matrix over ``seg``.

    The mean is taken over the same segment and the divisor is the full
    segment length, not ``len - w``.
    """
    x = _block(series, seg)
    n = x.shape[0]
    if not 0 <= w < n:
        raise IndexError(f"lag {w} outside [0, {n})")
    return _autocov(x - x.mean(axis=0), w)


def bandwidth(n: int) -> int:
    """Number of Bartlett lags for a segment of length ``n``: ``floor(log10 n)``."""
    return int(math.floor(math.log10(n))) if n >= 1 else 0


def bartlett_weight(x: float) -> float:
    return 1.0 - abs(x) if abs(x) <= 1.0 else 0.0


def long_run_from_block(x: np.ndarray) -> LongRunCovariance:
    n = x.shape[0]
    c = x - x.mean(axis=0)
    W = bandwidth(n)
    omega = _autocov(c, 0)
    if not np.any(omega):
        return LongRunCovariance(np.zeros_like(omega), W, True)
    for w in range(1, W + 1):
        s = _autocov(c, w)
        omega = omega + bartlett_weight(w / (W + 1)) * (s + s.T)
    return LongRunCovariance(omega, W, False)


def bartlett_long_run(series, seg: Optional[Segment] = None) -> LongRunCovariance:
    """Bartlett-kernel estimate of the long-run covariance over ``seg``.

    Returns
    -------
    LongRunCovariance
        ``(matrix, bandwidth, degenerate)``.  A segment without variation
        yields a zero matrix with ``degenerate=True``; nothing is raised so
        callers can report the segment as untestable.
    """
    x = _block(series, seg)
    if x.shape[0] < 2:
        raise ValueError("long-run covariance needs at least two observations")
    return long_run_from_block(x)


def inverse_sqrt(m) -> np.ndarray:
    """Symmetric inverse square root via eigendecomposition.

    Raises
    ------
    SingularMatrixError
        If the smallest eigenvalue is ``<= 1e-12``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    if vals[0] <= EPS_PD:
        raise SingularMatrixError(vals[0])
    return (vecs / np.sqrt(vals)) @ vecs.T
