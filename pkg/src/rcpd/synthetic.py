"""ARMA(1,1) series with planted mean changes and the four benchmark experiments.

Each replication ``i`` draws its noise and its change directions from two
independent children of ``SeedSequence(seed, spawn_key=(i,))``, so reports
are reproducible for a given ``(seed, reps)`` and every cell of an
experiment sees the same noise paths.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

from .critical_values import CriticalValueTable, Kind, default_cache_path
from .detector import RealTimeDetector
from .segmentation import segment_array
from .series import RcpdConfig, TimeSeries, Trend, Variant
from .trend import ti_f

BURN_IN = 100


@dataclass(frozen=True)
class ArmaSpec:
    """``Y_n = phi Y_{n-1} + e_n + theta e_{n-1}`` with ``e_n ~ N(0, sigma^2)``."""

    phi: float = 0.3
    theta: float = 0.3
    sigma: float = 1.0
    n: int = 600
    seed: int = 0
    dim: int = 1

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ValueError("|phi| must be < 1 for a stationary ARMA(1,1)")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.n < 1 or self.dim < 1:
            raise ValueError("n and dim must be positive")

    @property
    def variance(self) -> float:
        return self.sigma**2 * (1 + (self.phi + self.theta) ** 2 / (1 - self.phi**2))

    @property
    def long_run_variance(self) -> float:
        return self.sigma**2 * (1 + self.theta) ** 2 / (1 - self.phi) ** 2


@dataclass(frozen=True)
class ChangePlan:
    """Additive mean shifts ``(index, delta)``; ``delta`` applies from ``index`` on."""

    shifts: Tuple[Tuple[int, Tuple[float, ...]], ...] = ()

    def __init__(self, shifts=()):
        norm = []
        for idx, delta in shifts:
            norm.append((int(idx), tuple(np.atleast_1d(np.asarray(delta, dtype=float)).tolist())))
        object.__setattr__(self, "shifts", tuple(norm))
        idx = [i for i, _ in self.shifts]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("change indices must be strictly increasing")

    def check(self, n):
        for i, _ in self.shifts:
            if not 1 < i <= n:
                raise ValueError(f"change index {i} outside (1, {n}]")

    def mean_path(self, n: int, dim: int = 1) -> np.ndarray:
        mu = np.zeros((n, dim))
        for i, delta in self.shifts:
            mu[i - 1 :] += np.asarray(delta)
        return mu


def arma_noise(spec: ArmaSpec, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal((spec.n + BURN_IN, spec.dim)) * spec.sigma
    y = lfilter([1.0, spec.theta], [1.0, -spec.phi], eps, axis=0)
    return y[BURN_IN:]


def generate(spec: ArmaSpec, plan: Optional[ChangePlan] = None, rng=None) -> TimeSeries:
    """ARMA(1,1) noise plus the cumulative mean path of ``plan``."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    plan = plan or ChangePlan()
    plan.check(spec.n)
    return TimeSeries(arma_noise(spec, rng) + plan.mean_path(spec.n, spec.dim))


def rep_streams(seed: int, rep: int):
    """``(noise_rng, direction_rng)`` for replication ``rep``."""
    noise, direction = np.random.SeedSequence(seed, spawn_key=(rep,)).spawn(2)
    return np.random.default_rng(noise), np.random.default_rng(direction)


def planted(spec, rep_seed, rep, change_points, mu):
    """Series with changes after each index of ``change_points`` (last pre-change index)."""
    noise_rng, dir_rng = rep_streams(rep_seed, rep)
    signs = dir_rng.choice([-1.0, 1.0], size=len(change_points))
    y = arma_noise(spec, noise_rng)[:, 0]
    mu_path = np.zeros(spec.n)
    for k, s in zip(change_points, signs):
        mu_path[k:] += s * mu
    return y + mu_path, signs


@dataclass
class ExperimentReport:
    """Tabular experiment output with CSV and JSON renderings."""

    experiment: int
    params: Dict
    rows: List[Dict] = field(default_factory=list)

    def cell(self, **match) -> Dict:
        for row in self.rows:
            if all(_eq(row.get(k), v) for k, v in match.items()):
                return row
        raise KeyError(f"no row matching {match}")

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        out = io.StringIO()
        cols = list(self.rows[0].keys())
        writer = csv.DictWriter(out, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _fmt(row[k]) for k in cols})
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps({"experiment": self.experiment, "params": self.params, "rows": self.rows},
                          indent=1, default=_json_default)


def _eq(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return a is not None and b is not None and math.isclose(a, b)
    return a == b


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.4g}"
    return v


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


def _median(values):
    return float(np.median(values)) if values else math.nan


def _provider(cv_provider):
    return cv_provider if cv_provider is not None else CriticalValueTable(default_cache_path())


def _count_cells(counts, target):
    counts = np.asarray(counts)
    return (
        float(np.mean(counts < target)),
        float(np.mean(counts == target)),
        float(np.mean(counts > target)),
    )


def segmentation_tests(n: int) -> Dict[int, List[int]]:
    """Planted change locations (last pre-change index) of the two tests."""
    return {1: [i * n // 3 for i in (1, 2)], 2: [i * n // 5 for i in (1, 2, 3, 4)]}


def experiment_segmentation(reps: int = 1000, mus: Sequence[float] = (1.0, 1.5, 2.0), seed: int = 0,
                            cv_provider=None, alpha: float = 0.05, arma: ArmaSpec = ArmaSpec()) -> ExperimentReport:
    """Exact-count rates of standard vs. modified binary segmentation."""
    if reps < 1:
        raise ValueError("reps must be positive")
    cv = _provider(cv_provider)(Kind.OFFLINE, r=1, alpha=alpha)
    rows = []
    for test, cps in segmentation_tests(arma.n).items():
        for mu in mus:
            counts = {"bs": [], "mbs": []}
            for rep in range(reps):
                x, _ = planted(arma, seed, rep, cps, mu)
                mbs, bs = segment_array(x[:, None], 1, arma.n, cv)
                counts["bs"].append(len(bs))
                counts["mbs"].append(len(mbs))
            for method in ("bs", "mbs"):
                under, exact, over = _count_cells(counts[method], len(cps))
                rows.append({"test": test, "n_cps": len(cps), "mu": float(mu), "method": method,
                             "under": under, "exact": exact, "over": over})
    return ExperimentReport(1, {"reps": reps, "seed": seed, "alpha": alpha, **_arma_params(arma)}, rows)


def _arma_params(arma):
    return {"phi": arma.phi, "theta": arma.theta, "sigma": arma.sigma, "n": arma.n}


def _run_detector(x, config, provider):
    det = RealTimeDetector(config, provider)
    for v in x.tolist():
        det.push(v)
    return det.close()


def match_detections(indices, cps) -> Dict[int, int]:
    """First detection after each planted change and before the next one.

    Returns ``{change position in cps: detection index}``.
    """
    bounds = list(cps) + [math.inf]
    out = {}
    for k in indices:
        for j in range(len(cps)):
            if bounds[j] < k <= bounds[j + 1] and j not in out:
                out[j] = k
                break
    return out


def experiment_trend(reps: int = 1000, mus: Sequence[float] = (1.0, 1.5, 2.0), seed: int = 0,
                     cv_provider=None, alpha: float = 0.05, gamma: float = 0.25, l: int = 50, d: int = 50,
                     arma: ArmaSpec = ArmaSpec(), p: Tuple[int, int, int] = (9, 12, 26)) -> ExperimentReport:
    """Direction success of the detector-sign and MACD (h = 0) indicators.

    The detector runs on the series of the segmentation experiment, with
    monitoring starting halfway to the first planted change; the first
    detection following each planted change is scored against the planted
    direction.
    """
    provider = _provider(cv_provider)
    rows = []
    for test, cps in segmentation_tests(arma.n).items():
        config = RcpdConfig(alpha=alpha, gamma=gamma, l=l, d=d, ms0=cps[0] // 2, trend=Trend.TS,
                            p1=p[0], p2=p[1], p3=p[2])
        for mu in mus:
            ok_ts = ok_f = scored = 0
            for rep in range(reps):
                x, signs = planted(arma, seed, rep, cps, mu)
                events = _run_detector(x, config, provider)
                by_index = {e.index: e for e in events}
                for j, k in match_detections([e.index for e in events], cps).items():
                    truth = 1.0 if signs[j] > 0 else -1.0
                    ts = by_index[k].cp.direction
                    f = ti_f(x, k, 0, *p, fallback=ts)
                    scored += 1
                    ok_ts += (ts.value == "up") == (truth > 0)
                    ok_f += (f.value == "up") == (truth > 0)
            rows.append({"test": test, "mu": float(mu), "scored": scored,
                         "ti_ts": ok_ts / scored if scored else math.nan,
                         "ti_f": ok_f / scored if scored else math.nan})
    params = {"reps": reps, "seed": seed, "alpha": alpha, "gamma": gamma, "l": l, "d": d, **_arma_params(arma)}
    return ExperimentReport(2, params, rows)


def _online_experiment(number, cps, reps, mus, ls, variants, seed, cv_provider, alpha, gamma, d, ms0, arma):
    provider = _provider(cv_provider)
    rows = []
    target = len(cps)
    for variant in variants:
        variant = Variant(variant)
        for mu in mus:
            for l in ls:
                config = RcpdConfig(alpha=alpha, gamma=gamma, l=l, d=d, ms0=ms0, variant=variant)
                counts, hits = [], []
                for rep in range(reps):
                    x, _ = planted(arma, seed, rep, cps, mu)
                    events = _run_detector(x, config, provider)
                    counts.append(len(events))
                    if len(events) == target:
                        hits.append([e.index for e in events])
                under, exact, over = _count_cells(counts, target)
                row = {"variant": variant.value, "mu": float(mu), "l": int(l)}
                if target == 1:
                    row.update({"none": under, "one": exact, "more": over,
                                "median": _median([h[0] for h in hits])})
                else:
                    row.update({"fewer": under, "exact": exact, "more": over})
                    for j in range(target):
                        row[f"median_{j + 1}"] = _median([h[j] for h in hits])
                rows.append(row)
    params = {"reps": reps, "seed": seed, "alpha": alpha, "gamma": gamma, "d": d, "ms0": ms0,
              "change_points": list(cps), **_arma_params(arma)}
    return ExperimentReport(number, params, rows)


SINGLE_MUS = (0.0, 0.5, 0.7, 1.0, 1.2, 1.5, 2.0)
DOUBLE_MUS = (0.5, 0.7, 1.0, 1.2, 1.5, 2.0)
WINDOWS = (25, 50, 100)


def experiment_single_cp(reps: int = 1000, mus: Sequence[float] = SINGLE_MUS, ls: Sequence[int] = WINDOWS,
                         variant=("standard", "ratio"), seed: int = 0, cv_provider=None, alpha: float = 0.05,
                         gamma: float = 0.25, d: int = 50, ms0: int = 200,
                         arma: ArmaSpec = ArmaSpec()) -> ExperimentReport:
    """Detection counts {0, 1, >1} and median index for one change at ``n/2``."""
    variants = (variant,) if isinstance(variant, (str, Variant)) else tuple(variant)
    return _online_experiment(3, [arma.n // 2], reps, mus, ls, variants, seed, cv_provider, alpha,
                              gamma, d, ms0, arma)


def experiment_double_cp(reps: int = 1000, mus: Sequence[float] = DOUBLE_MUS, ls: Sequence[int] = WINDOWS,
                         variant=("standard", "ratio"), seed: int = 0, cv_provider=None, alpha: float = 0.05,
                         gamma: float = 0.25, d: int = 50, ms0: int = 200,
                         arma: ArmaSpec = ArmaSpec()) -> ExperimentReport:
    """Detection counts {<2, 2, >2} and medians for changes at ``n/3`` and ``2n/3``."""
    variants = (variant,) if isinstance(variant, (str, Variant)) else tuple(variant)
    cps = [arma.n // 3, 2 * arma.n // 3]
    return _online_experiment(4, cps, reps, mus, ls, variants, seed, cv_provider, alpha, gamma, d, ms0, arma)


def real_like_corpus(n_series: int = 200, n: int = 1000, seed: int = 0, level: float = 20.0,
                     max_changes: int = 4, min_gap: int = 100, mu_range=(1.5, 4.0),
                     arma: ArmaSpec = ArmaSpec()) -> List[Tuple[np.ndarray, List[int]]]:
    """Positive-level series with 0..``max_changes`` random mean shifts.

    Returns ``(values, change_points)`` pairs; change points are last
    pre-change indices, at least ``min_gap`` apart and from the ends.
    """
    spec = ArmaSpec(arma.phi, arma.theta, arma.sigma, n)
    if n <= 2 * min_gap:
        raise ValueError("series too short for the requested gap")
    # most changes that fit in [min_gap, n - min_gap) at min_gap spacing
    capacity = (n - 2 * min_gap - 1) // min_gap + 1
    out = []
    for i in range(n_series):
        noise_rng, plan_rng = rep_streams(seed, i)
        y = arma_noise(spec, noise_rng)[:, 0]
        k = min(int(plan_rng.integers(0, max_changes + 1)), capacity)
        cps = []
        while len(cps) < k:
            cand = int(plan_rng.integers(min_gap, n - min_gap))
            if all(abs(cand - c) >= min_gap for c in cps):
                cps.append(cand)
            elif len(cps) == k - 1 and plan_rng.random() < 0.01:
                cps = []  # escape an unlucky packing near capacity
        cps.sort()
        mean = np.full(n, level)
        for c in cps:
            mean[c:] += plan_rng.choice([-1.0, 1.0]) * plan_rng.uniform(*mu_range)
        out.append((y + mean, cps))
    return out


__all__ = [
    "ArmaSpec", "ChangePlan", "ExperimentReport", "generate", "arma_noise", "planted",
    "experiment_segmentation", "experiment_trend", "experiment_single_cp", "experiment_double_cp",
    "real_like_corpus", "match_detections", "segmentation_tests", "rep_streams",
    "SINGLE_MUS", "DOUBLE_MUS", "WINDOWS",
]
