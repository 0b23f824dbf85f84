"""Sequential CUSUM monitoring with standard and ratio-type stopping rules.

After a change-free training sample ``X_1..X_m`` the detector

    E(m, l) = mean(X_{m+1..m+l}) - mean(X_{1..m})

is compared against the boundary ``cv * g(m, l)`` with

    g(m, l) = sqrt(m) * (1 + l/m) * (l / (l + m))**gamma.

Standard variant: stop when ``||l * Omega_m^{-1/2} E||_1 >= cv * g(m, l)``.
Ratio variant: stop when ``(l^2/m) E' D_m^{-1} E >= cv * g(m, l)^2 / m`` where
``D_m = m^{-2} sum_j j^2 (mean_{1..j} - mean_{1..m})(...)'`` replaces the
long-run covariance.  Both training matrices are frozen at training time, so
a step costs O(r) (standard) or O(r^2) (ratio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import SingularMatrixError, inverse_sqrt, long_run_from_block
from .critical_values import Kind
from .offline import MIN_SEGMENT
from .series import Segment, Variant, as_series


class UntrainableError(ValueError):
    """The training window cannot support the requested statistic."""

    def __init__(self, variant, reason):
        self.variant = Variant(variant)
        super().__init__(f"{self.variant.value} monitor untrainable: {reason}")


def weight_g(m, l, gamma) -> float:
    """Boundary weight ``sqrt(m) (1 + l/m) (l/(l+m))^gamma``."""
    return math.sqrt(m) * (1.0 + l / m) * (l / (l + m)) ** gamma


def ratio_denominator(x: np.ndarray) -> np.ndarray:
    """``m^{-2} sum_{j=1}^m j^2 (mean_{1..j} - mean_{1..m})(...)^T`` for ``(m, r)`` data."""
    m = x.shape[0]
    j = np.arange(1, m + 1)[:, None]
    # j * (mean_{1..j} - mean_{1..m}) = S_j - j * mean_{1..m}
    dev = np.cumsum(x, axis=0) - j * x.mean(axis=0)
    return dev.T @ dev / m**2


def cv_kind(variant) -> Kind:
    return Kind.ONLINE_CT if Variant(variant) is Variant.STANDARD else Kind.ONLINE_RT


@dataclass(frozen=True)
class Stop:
    """Stopping verdict: ``tau`` monitoring steps and the detector ``E``."""

    tau: int
    e: np.ndarray
    statistic: float
    threshold: float

    @property
    def sign(self) -> int:
        return int(np.sign(self.e[0]))


class Monitor:
    """State of one sequential test.  Create it with :func:`train`.

    Parameters
    ----------
    variant : Variant
    m : int
        Training length.
    training_mean : ndarray
    matrix : ndarray
        ``Omega_m^{-1/2}`` (standard) or ``D_m^{-1}`` (ratio).
    cv, gamma : float
    training_start : int
        Absolute index of the first training observation.
    """

    def __init__(self, variant, m, training_mean, matrix, cv, gamma, training_start=1):
        self.variant = Variant(variant)
        self.m = int(m)
        if self.m < 2:
            raise ValueError("training length must be >= 2")
        self.training_mean = np.asarray(training_mean, dtype=float).reshape(-1)
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.cv = float(cv)
        self.gamma = float(gamma)
        self.training_start = int(training_start)
        self.l = 0
        self.running_sum = np.zeros_like(self.training_mean)
        self.dim = self.training_mean.size
        self._scalar = self.dim == 1
        if self._scalar:
            self._mu = float(self.training_mean[0])
            self._k = float(self.matrix[0, 0])
            self._s = 0.0
        self._sqrt_m = math.sqrt(self.m)
        self._standard = self.variant is Variant.STANDARD

    @property
    def omega_inv_sqrt(self) -> Optional[np.ndarray]:
        return self.matrix if self.variant is Variant.STANDARD else None

    @property
    def ratio_denominator_inverse(self) -> Optional[np.ndarray]:
        return self.matrix if self.variant is Variant.RATIO else None

    @property
    def training_end(self) -> int:
        return self.training_start + self.m - 1

    def boundary(self, l) -> float:
        g = weight_g(self.m, l, self.gamma)
        if self.variant is Variant.STANDARD:
            return self.cv * g
        return self.cv * g * g / self.m

    def _threshold(self, l):
        m = self.m
        g = self._sqrt_m * (1.0 + l / m) * (l / (l + m)) ** self.gamma
        return self.cv * g if self._standard else self.cv * g * g / m

    def step(self, x) -> Optional[Stop]:
        """Feed the next observation; return a :class:`Stop` or ``None``."""
        if self._scalar:
            if isinstance(x, (float, int)):
                v = float(x)
            else:
                arr = np.asarray(x, dtype=float).reshape(-1)
                if arr.size != 1:
                    raise ValueError(f"expected a scalar observation, got {x!r}")
                v = float(arr[0])
            if not math.isfinite(v):
                raise ValueError(f"invalid observation {x!r}")
            l = self.l + 1
            s = self._s + v
            e = s / l - self._mu
            if self.variant is Variant.STANDARD:
                stat = abs(l * e) * self._k
            else:
                stat = l * l / self.m * e * e * self._k
            self.l, self._s = l, s
            self.running_sum[0] = s
            thr = self._threshold(l)
            if stat >= thr:
                return Stop(l, np.array([e]), stat, thr)
            return None

        v = np.asarray(x, dtype=float).reshape(-1)
        if v.size != self.dim or not np.all(np.isfinite(v)):
            raise ValueError(f"invalid observation {x!r}")
        l = self.l + 1
        s = self.running_sum + v
        e = s / l - self.training_mean
        if self.variant is Variant.STANDARD:
            stat = float(np.abs(l * (self.matrix @ e)).sum())
        else:
            stat = float(l * l / self.m * (e @ self.matrix @ e))
        self.l, self.running_sum = l, s
        thr = self._threshold(l)
        if stat >= thr:
            return Stop(l, e, stat, thr)
        return None

    def cp_index(self, tau: int) -> int:
        """Absolute index of the observation that triggered the stop."""
        return online_cp_index(self, tau)


def online_cp_index(state: Monitor, tau: Optional[int]) -> int:
    if tau is None or tau < 1 or tau > state.l:
        raise RuntimeError("no stop has occurred at the given step")
    return state.training_start + state.m + tau - 1


def train_block(x: np.ndarray, variant, cv: float, gamma: float, training_start: int = 1) -> Monitor:
    variant = Variant(variant)
    m = x.shape[0]
    if m < MIN_SEGMENT:
        raise UntrainableError(variant, f"training length {m} < {MIN_SEGMENT}")
    if variant is Variant.STANDARD:
        lr = long_run_from_block(x)
        if lr.degenerate:
            raise UntrainableError(variant, "zero long-run covariance")
        try:
            mat = inverse_sqrt(lr.matrix)
        except SingularMatrixError as exc:
            raise UntrainableError(variant, str(exc)) from exc
    else:
        d = ratio_denominator(x)
        vals = np.linalg.eigvalsh(d)
        if vals[0] <= 1e-12:
            raise UntrainableError(variant, f"singular ratio denominator (eigenvalue {vals[0]:.3g})")
        mat = np.linalg.inv(d)
    return Monitor(variant, m, x.mean(axis=0), mat, cv, gamma, training_start)


def train(series, training_seg: Optional[Segment] = None, variant=Variant.STANDARD, *,
          cv_provider=None, alpha: float = 0.05, gamma: float = 0.25,
          cv: Optional[float] = None) -> Monitor:
    """Fit a :class:`Monitor` on ``training_seg``.

    Raises
    ------
    UntrainableError
        Training window shorter than 10 or with a singular matrix.
    """
    series = as_series(series)
    seg = training_seg or series.full()
    if cv is None:
        if cv_provider is None:
            raise ValueError("either cv or cv_provider is required")
        cv = cv_provider(cv_kind(variant), r=series.dim, alpha=alpha, gamma=gamma)
    return train_block(series.values(seg), variant, cv, gamma, seg.start)
