"""Monte Carlo critical values of the Brownian functionals behind the tests.

Three limits are simulated:

``offline``
    ``sup_{0<=t<=1} sum_j B_j(t)^2`` for ``r`` independent Brownian bridges.
``online_ct``
    ``sup_{0<t<=1} ||W(t)||_1 / t^gamma`` for an ``r``-dimensional Brownian
    motion (standard sequential CUSUM).
``online_rt``
    ``sup_{0<t<=t_max} B(1+t)' G^{-1} B(1+t) / rho(t)^2`` with
    ``B(s) = W(s) - s W(1)``, ``G = int_0^1 B B' ds`` and
    ``rho(t) = (1+t) (t/(1+t))^gamma`` (ratio-type sequential CUSUM).

Paths are drawn in fixed blocks of :data:`BLOCK` replications, block ``b``
seeded from ``SeedSequence(seed, spawn_key=(b,))``, so a value depends only
on the request and never on how many workers computed it.  Increments are
drawn time-major, which makes a longer horizon extend (not replace) the
paths of a shorter one.
"""

from __future__ import annotations

import datetime as _dt
import enum
import json
import logging
import math
import os
import tempfile
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

logger = logging.getLogger(__name__)

BLOCK = 250
# E[max of continuous BM] - E[max on a grid] ~ BETA * sigma * sqrt(dt)
BETA = 0.5825971579390106  # -zeta(1/2) / sqrt(2 pi)

DEFAULT_PATHS = 20_000
DEFAULT_GRID = 1_000
DEFAULT_TMAX = 10.0


class Kind(str, enum.Enum):
    OFFLINE = "offline"
    ONLINE_CT = "online_ct"
    ONLINE_RT = "online_rt"


@dataclass(frozen=True)
class CvRequest:
    """A fully specified critical-value simulation.

    ``correct`` applies the discrete-monitoring shift of the supremum for the
    off-line and standard on-line functionals; it has no effect on the
    ratio-type functional.
    """

    kind: Kind
    r: int = 1
    alpha: float = 0.05
    gamma: float = 0.0
    n_paths: int = DEFAULT_PATHS
    grid: int = DEFAULT_GRID
    t_max: float = DEFAULT_TMAX
    seed: int = 0
    correct: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.gamma < 0.5:
            raise ValueError(f"gamma must lie in [0, 0.5), got {self.gamma}")
        if self.n_paths < 1000:
            raise ValueError("n_paths must be >= 1000")
        if self.grid < 100:
            raise ValueError("grid must be >= 100 points per unit time")
        if self.kind is Kind.ONLINE_RT and not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.kind is Kind.OFFLINE and self.gamma != 0:
            object.__setattr__(self, "gamma", 0.0)

    @property
    def key(self) -> str:
        t_max = self.t_max if self.kind is Kind.ONLINE_RT else 0.0
        key = (
            f"{self.kind.value}|{self.r}|{self.gamma:.4f}|{self.alpha:.4f}"
            f"|{self.n_paths}|{self.grid}|{t_max:.4f}"
        )
        if not self.correct and self.kind is not Kind.ONLINE_RT:
            key += "|raw"
        return key


def _block_rng(seed, b):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def _increments(rng, steps, size, r, grid):
    # time-major so that extending `steps` only appends to each path
    return rng.standard_normal((steps, size, r)) / math.sqrt(grid)


def _offline_block(req, rng, size):
    dw = _increments(rng, req.grid, size, req.r, req.grid)
    w = np.cumsum(dw, axis=0)
    t = (np.arange(1, req.grid + 1) / req.grid)[:, None, None]
    b = w - t * w[-1]
    norm = np.sqrt(np.sum(b * b, axis=2))
    sup = norm.max(axis=0)
    if req.correct:
        sup = sup + BETA / math.sqrt(req.grid)
    return sup**2, 0


def _online_ct_block(req, rng, size):
    dw = _increments(rng, req.grid, size, req.r, req.grid)
    w = np.cumsum(dw, axis=0)
    t = np.arange(1, req.grid + 1) / req.grid
    scale = t ** (-req.gamma)
    stat = np.abs(w).sum(axis=2) * scale[:, None]
    k = stat.argmax(axis=0)
    sup = stat[k, np.arange(size)]
    if req.correct:
        sup = sup + BETA * math.sqrt(req.r / req.grid) * scale[k]
    return sup, 0


def _bridge_gram(b_unit, grid):
    # trapezoid on [0, 1]; B(0) = B(1) = 0 so the end terms vanish
    inner = b_unit[:-1]
    return np.einsum("tpi,tpj->pij", inner, inner) / grid


def _rt_paths(req, rng, size):
    steps = int(round((1.0 + req.t_max) * req.grid))
    w = np.cumsum(_increments(rng, steps, size, req.r, req.grid), axis=0)
    s = (np.arange(1, steps + 1) / req.grid)[:, None, None]
    b = w - s * w[req.grid - 1]
    gram = _bridge_gram(b[: req.grid], req.grid)
    return b[req.grid :], gram


def _online_rt_block(req, rng, size):
    tail, gram = _rt_paths(req, rng, size)
    good = _well_conditioned(gram)
    rejected = int(np.count_nonzero(~good))
    while not np.all(good):
        # resample singular paths from the same block stream
        bad = np.flatnonzero(~good)
        new_tail, new_gram = _rt_paths(req, rng, bad.size)
        tail[:, bad] = new_tail
        gram[bad] = new_gram
        ok = _well_conditioned(new_gram)
        rejected += int(np.count_nonzero(~ok))
        good[bad] = ok
    inv = np.linalg.inv(gram)
    t = np.arange(1, tail.shape[0] + 1) / req.grid
    rho2 = ((1.0 + t) * (t / (1.0 + t)) ** req.gamma) ** 2
    quad = np.einsum("tpi,pij,tpj->tp", tail, inv, tail)
    return (quad / rho2[:, None]).max(axis=0), rejected


def _well_conditioned(gram):
    vals = np.linalg.eigvalsh(gram)
    return vals[:, 0] > 1e-10 * np.maximum(vals[:, -1], 1e-300)


_SIMULATORS = {
    Kind.OFFLINE: _offline_block,
    Kind.ONLINE_CT: _online_ct_block,
    Kind.ONLINE_RT: _online_rt_block,
}


def simulate_suprema(req: CvRequest, n_jobs: int = 1):
    """Simulated suprema for every path of ``req`` and the rejected-path count."""
    sim = _SIMULATORS[req.kind]
    n_blocks = -(-req.n_paths // BLOCK)

    def run(b):
        size = min(BLOCK, req.n_paths - b * BLOCK)
        return sim(req, _block_rng(req.seed, b), size)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]
    rejected = sum(p[1] for p in parts)
    if rejected:
        logger.warning("%s: resampled %d paths with a singular bridge Gram matrix", req.key, rejected)
    return np.concatenate([p[0] for p in parts]), rejected


def simulate(req: CvRequest, n_jobs: int = 1) -> float:
    sup, _ = simulate_suprema(req, n_jobs)
    return float(np.quantile(sup, 1.0 - req.alpha))


def simulate_offline_cv(req: CvRequest, n_jobs: int = 1) -> float:
    if req.kind is not Kind.OFFLINE:
        raise ValueError("expected an offline request")
    return simulate(req, n_jobs)


def simulate_online_ct_cv(req: CvRequest, n_jobs: int = 1) -> float:
    if req.kind is not Kind.ONLINE_CT:
        raise ValueError("expected an online_ct request")
    return simulate(req, n_jobs)


def simulate_online_rt_cv(req: CvRequest, n_jobs: int = 1) -> float:
    if req.kind is not Kind.ONLINE_RT:
        raise ValueError("expected an online_rt request")
    return simulate(req, n_jobs)


def default_cache_path() -> Path:
    env = os.environ.get("RCPD_CV_CACHE")
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "rcpd" / "critical_values.json"


class CriticalValueTable:
    """JSON-persisted cache of simulated critical values.

    The table is also a critical-value provider: calling it as
    ``table(kind, r, alpha, gamma)`` returns the value for a request built
    from the table's default simulation settings.

    Parameters
    ----------
    path : path-like or None
        Cache file.  ``None`` keeps the table in memory only.
    """

    def __init__(self, path=None, *, n_paths=DEFAULT_PATHS, grid=DEFAULT_GRID,
                 t_max=DEFAULT_TMAX, seed=0, n_jobs=1):
        self.path = Path(path) if path is not None else None
        self.defaults = dict(n_paths=n_paths, grid=grid, t_max=t_max, seed=seed)
        self.n_jobs = n_jobs
        self._entries = {}
        self._lock = threading.Lock()
        self._load()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def _read_file(self):
        if self.path is None or not self.path.exists():
            return {}
        try:
            data = json.loads(self.path.read_text(encoding="utf-8"))
            if not isinstance(data, dict):
                raise ValueError("cache root is not an object")
            return {k: v for k, v in data.items() if isinstance(v, dict) and float(v["value"]) > 0}
        except (OSError, ValueError, KeyError, TypeError) as exc:
            warnings.warn(f"ignoring unreadable critical-value cache {self.path}: {exc}")
            return {}

    def _load(self):
        self._entries = self._read_file()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, req):
        return self.lookup(req) is not None

    def request(self, kind, r=1, alpha=0.05, gamma=0.0, **overrides) -> CvRequest:
        params = {**self.defaults, **overrides}
        return CvRequest(Kind(kind), r=r, alpha=alpha, gamma=gamma, **params)

    def lookup(self, req: CvRequest) -> Optional[float]:
        entry = self._entries.get(req.key)
        if entry is None or entry.get("seed") != req.seed:
            return None
        return float(entry["value"])

    def store(self, req: CvRequest, value: float, rejected: int = 0):
        entry = {
            "value": value,
            "seed": req.seed,
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "n_paths": req.n_paths,
            "grid": req.grid,
            "t_max": req.t_max,
        }
        if rejected:
            entry["rejected_paths"] = rejected
        with self._lock:
            self._entries[req.key] = entry
            self._persist()

    def _persist(self):
        if self.path is None:
            return
        try:
            merged = {**self._read_file(), **self._entries}
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".cv-", suffix=".json")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(merged, fh, indent=1, sort_keys=True)
            os.replace(tmp, self.path)
            self._entries = merged
        except OSError as exc:
            warnings.warn(f"could not write critical-value cache {self.path}: {exc}")

    def get_or_compute(self, req: CvRequest) -> float:
        value = self.lookup(req)
        if value is not None:
            return value
        sup, rejected = simulate_suprema(req, self.n_jobs)
        value = float(np.quantile(sup, 1.0 - req.alpha))
        self.store(req, value, rejected)
        return value

    def __call__(self, kind, r=1, alpha=0.05, gamma=0.0) -> float:
        return self.get_or_compute(self.request(kind, r=r, alpha=alpha, gamma=gamma))


def get_or_compute(table: CriticalValueTable, req: CvRequest) -> float:
    return table.get_or_compute(req)


CvProvider = Callable[..., float]
