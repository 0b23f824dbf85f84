"""Real-time change-point detector: off-line training, on-line monitoring, reset.

The state machine, for a stream ``X_1, X_2, ...``:

* at ``n = m_s`` segment ``X_1..X_{m_s}`` off-line; the training window runs
  from the latest off-line change (or ``m_s - u + 1`` when there is none)
  to ``m_s``;
* monitor ``X_{m_s+1}, ..., X_{m_s+l}``;
* on a stop at ``k``: label the direction, emit an event and set
  ``m_s = k + d``;
* if the window is exhausted without a stop: ``m_s = m_s + l`` and retrain.

Detections depend only on observations up to the triggering one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional

import numpy as np

from .critical_values import CriticalValueTable, Kind, default_cache_path
from .online import Monitor, Stop, UntrainableError, cv_kind, train_block
from .segmentation import segment_array
from .series import (
    ChangePoint,
    Phase,
    RcpdConfig,
    Segment,
    Trend,
    Variant,
    as_series,
)
from .trend import ti_f, ti_ts

logger = logging.getLogger(__name__)


@dataclass
class DetectionEvent:
    """One on-line detection.

    ``pending`` is true while a MACD direction is still waiting for its
    ``h`` post-change samples; ``cp.direction`` is ``None`` until then.
    """

    cp: ChangePoint
    training_window: Segment
    variant: Variant
    trend: Trend
    at_step: int
    pending: bool = False

    @property
    def index(self) -> int:
        return self.cp.index

    def as_dict(self) -> dict:
        d = self.cp.direction
        return {
            "index": self.cp.index,
            "direction": "pending" if self.pending else (d.value if d else None),
            "lag": self.cp.detection_lag,
            "variant": self.variant.value,
            "trend": self.trend.value,
            "training_start": self.training_window.start,
            "training_end": self.training_window.end,
            "magnitude": _json_float(self.cp.magnitude),
        }


def _json_float(x):
    if x is None or math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class Diagnostic:
    index: int
    message: str


def _relative_change(e, mu):
    if mu != 0:
        return e / abs(mu)
    if e == 0:
        return 0.0
    return math.copysign(math.inf, e)


class RealTimeDetector:
    """Push-based detector for one series.

    Parameters
    ----------
    config : RcpdConfig
    cv_provider : callable, optional
        Critical-value provider; defaults to the on-disk cache.
    on_event : callable, optional
        Called with each :class:`DetectionEvent` when it is detected.
    on_direction : callable, optional
        Called with an event once a pending MACD direction is settled.
    """

    def __init__(self, config: Optional[RcpdConfig] = None, cv_provider=None,
                 on_event: Optional[Callable] = None, on_direction: Optional[Callable] = None):
        self.config = config or RcpdConfig()
        self.cv_provider = cv_provider if cv_provider is not None else CriticalValueTable(default_cache_path())
        self.on_event = on_event
        self.on_direction = on_direction
        self.events: List[DetectionEvent] = []
        self.diagnostics: List[Diagnostic] = []
        self.n = 0
        self.ms = self.config.ms0
        self.monitor: Optional[Monitor] = None
        self._buf = None
        self._dim = None
        self._cv_off = None
        self._cv_on = None
        self._pending = []  # (event, stop)

    @property
    def history(self) -> np.ndarray:
        return self._buf[: self.n] if self._buf is not None else np.empty((0, 0))

    def _append(self, x):
        if self._dim == 1 and isinstance(x, (float, int)):
            v = float(x)
            if not math.isfinite(v):
                raise ValueError(f"observation {self.n + 1}: non-finite value")
            if self.n == self._buf.shape[0]:
                self._buf = np.concatenate([self._buf, np.empty_like(self._buf)])
            self._buf[self.n, 0] = v
            self.n += 1
            return v
        row = np.asarray(x, dtype=float).reshape(-1)
        if self._buf is None:
            self._dim = row.size
            self._buf = np.empty((1024, self._dim))
        elif row.size != self._dim:
            raise ValueError(f"observation {self.n + 1}: expected {self._dim} values, got {row.size}")
        if not np.all(np.isfinite(row)):
            raise ValueError(f"observation {self.n + 1}: non-finite value")
        if self.n == self._buf.shape[0]:
            self._buf = np.concatenate([self._buf, np.empty_like(self._buf)])
        self._buf[self.n] = row
        self.n += 1
        return row

    def _critical_values(self):
        if self._cv_off is None:
            c = self.config
            self._cv_off = self.cv_provider(Kind.OFFLINE, r=self._dim, alpha=c.alpha)
            self._cv_on = self.cv_provider(cv_kind(c.variant), r=self._dim, alpha=c.alpha, gamma=c.gamma)
        return self._cv_off, self._cv_on

    def _retrain(self):
        c = self.config
        cv_off, cv_on = self._critical_values()
        ms = self.ms
        changes, _ = segment_array(self._buf, 1, ms, cv_off, validate=c.validate)
        start = changes[-1] if changes else max(1, ms - c.u + 1)
        try:
            self.monitor = train_block(self._buf[start - 1 : ms], c.variant, cv_on, c.gamma, start)
        except UntrainableError as exc:
            self.monitor = None
            self.diagnostics.append(Diagnostic(ms, str(exc)))
            logger.info("n=%d: training window [%d, %d] skipped: %s", ms, start, ms, exc)
            self.ms = ms + c.l

    def push(self, x) -> Optional[DetectionEvent]:
        """Consume one observation; return the event it triggers, if any."""
        row = self._append(x)
        n = self.n
        event = None
        if self.monitor is not None:
            stop = self.monitor.step(row if self._dim > 1 else float(row if isinstance(row, float) else row[0]))
            if stop is not None:
                event = self._detect(stop)
                self.ms = n + self.config.d
                self.monitor = None
            elif n == self.ms + self.config.l:
                self.ms = n
                self.monitor = None
        if n == self.ms:
            self._retrain()
        if self._pending:
            self._settle(final=False)
        return event

    def _detect(self, stop: Stop) -> DetectionEvent:
        c = self.config
        mon = self.monitor
        k = mon.cp_index(stop.tau)
        cp = ChangePoint(
            index=k,
            direction=None,
            magnitude=_relative_change(float(stop.e[0]), float(mon.training_mean[0])),
            detection_lag=stop.tau,
            phase=Phase.ONLINE,
        )
        event = DetectionEvent(
            cp=cp,
            training_window=Segment(mon.training_start, mon.training_end),
            variant=c.variant,
            trend=c.trend,
            at_step=k,
        )
        if c.trend is Trend.TS:
            cp.direction = ti_ts(stop.e[0])
        elif c.h == 0:
            cp.direction = self._macd_direction(k, 0, stop)
        else:
            event.pending = True
            self._pending.append((event, stop))
        self.events.append(event)
        if self.on_event is not None:
            self.on_event(event)
        return event

    def _macd_direction(self, k, h, stop):
        c = self.config
        return ti_f(self._buf[: k + h, 0], k, h, c.p1, c.p2, c.p3, fallback=ti_ts(stop.e[0]))

    def _settle(self, final):
        h = self.config.h
        still = []
        for event, stop in self._pending:
            k = event.cp.index
            if self.n >= k + h or final:
                event.cp.direction = self._macd_direction(k, min(h, self.n - k), stop)
                event.pending = False
                if self.on_direction is not None:
                    self.on_direction(event)
            else:
                still.append((event, stop))
        self._pending = still

    def close(self) -> List[DetectionEvent]:
        """Settle pending directions with whatever post-change data exists."""
        if self._pending:
            self._settle(final=True)
        return self.events


def run(source: Iterable, config: Optional[RcpdConfig] = None, sink: Optional[Callable] = None,
        cv_provider=None, on_direction: Optional[Callable] = None) -> List[DetectionEvent]:
    """Run the detector over an observation stream.

    ``sink`` receives each event as soon as it is detected, in order and at
    most once.
    """
    det = RealTimeDetector(config, cv_provider, on_event=sink, on_direction=on_direction)
    for x in source:
        det.push(x)
    return det.close()


def replay(series, config: Optional[RcpdConfig] = None, cv_provider=None) -> List[DetectionEvent]:
    """Batch adapter: :func:`run` over the rows of a stored series."""
    series = as_series(series)
    rows = series.column(1).tolist() if series.dim == 1 else series.data
    return run(rows, config, cv_provider=cv_provider)
