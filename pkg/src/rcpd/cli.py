"""Command-line interface: ``rcpd {offline,monitor,bench,cv}``.

Exit codes: 0 success, 2 input error, 3 untestable data, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
from typing import Iterator, List, Optional

import numpy as np

from .critical_values import CriticalValueTable, Kind, default_cache_path
from .detector import DetectionEvent, RealTimeDetector
from .evaluation import change_magnitudes, direction_baseline
from .offline import MIN_SEGMENT
from .segmentation import segment_array
from .series import ParseError, RcpdConfig, TimeSeries, Trend, Variant, ingest_csv
from .synthetic import (
    ArmaSpec,
    ChangePlan,
    experiment_double_cp,
    experiment_segmentation,
    experiment_single_cp,
    experiment_trend,
    generate,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNTESTABLE = 3
EXIT_NUMERICAL = 4

WARM_GAMMAS = (0.0, 0.25, 0.45)
WARM_ALPHAS = (0.01, 0.05, 0.1)
WARM_DIMS = (1, 2)

log = logging.getLogger("rcpd")


class InputError(Exception):
    pass


def _gamma(text):
    v = float(text)
    if not 0 <= v < 0.5:
        raise argparse.ArgumentTypeError(f"gamma must lie in [0, 0.5), got {text}")
    return v


def _alpha(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _kind(text):
    try:
        return Kind(text.replace("-", "_"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown kind {text!r}") from None


def _cache_table(args) -> CriticalValueTable:
    path = args.cv_cache or default_cache_path()
    return CriticalValueTable(path, n_paths=args.paths, grid=args.grid, t_max=args.t_max, seed=args.cv_seed)


def parse_synthetic(spec: str):
    """Parse ``key=value`` pairs separated by commas into a series.

    Keys: ``phi, theta, sigma, n, seed`` for the noise, ``cps`` as
    colon-separated last pre-change indices and ``mu`` as one shift or a
    colon-separated list (signed) matching ``cps``.
    """
    fields = {}
    for part in filter(None, (p.strip() for p in spec.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise InputError(f"malformed synthetic field {part!r}")
        fields[key.strip()] = value.strip()
    known = {"phi", "theta", "sigma", "n", "seed", "cps", "mu"}
    unknown = set(fields) - known
    if unknown:
        raise InputError(f"unknown synthetic fields: {', '.join(sorted(unknown))}")
    try:
        arma = ArmaSpec(
            phi=float(fields.get("phi", 0.3)),
            theta=float(fields.get("theta", 0.3)),
            sigma=float(fields.get("sigma", 1.0)),
            n=int(fields.get("n", 600)),
            seed=int(fields.get("seed", 0)),
        )
        cps = [int(c) for c in fields["cps"].split(":")] if fields.get("cps") else []
        mus = [float(m) for m in fields.get("mu", "0").split(":")]
        if len(mus) == 1:
            mus = mus * len(cps)
        if len(mus) != len(cps):
            raise InputError("mu must be a single value or one per change point")
        plan = ChangePlan([(k + 1, m) for k, m in zip(cps, mus)])
        return generate(arma, plan)
    except ValueError as exc:
        raise InputError(f"invalid synthetic spec: {exc}") from exc


def _read_series(args) -> TimeSeries:
    if args.synthetic:
        return parse_synthetic(args.synthetic)
    if args.file is None:
        raise InputError("an input file (or --synthetic) is required")
    if args.file == "-":
        return ingest_csv(sys.stdin.read())
    try:
        with open(args.file, "rb") as fh:
            return ingest_csv(fh.read())
    except OSError as exc:
        raise InputError(str(exc)) from exc


def cmd_offline(args) -> int:
    series = _read_series(args)
    if series.n < MIN_SEGMENT:
        _emit({"cps": [], "testable": False, "reason": f"series shorter than {MIN_SEGMENT}"})
        return EXIT_UNTESTABLE
    cv = _cache_table(args)(Kind.OFFLINE, r=series.dim, alpha=args.alpha)
    changes, candidates = segment_array(series.data, 1, series.n, cv, validate=not args.no_validate)
    x = series.column(1)
    dirs = direction_baseline(x, changes)
    mags = change_magnitudes(x, changes)
    report = {
        "cps": [
            {"index": k, "direction": d.value, "magnitude": _finite_or_str(m)}
            for k, d, m in zip(changes, dirs, mags)
        ],
        "n": series.n,
        "alpha": args.alpha,
        "validated": not args.no_validate,
    }
    if not args.no_validate:
        report["candidates"] = candidates
    _emit(report)
    return EXIT_OK


def _finite_or_str(v):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _emit(obj, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(obj) + "\n")
    stream.flush()


def _parse_line(line: str, lineno: int, width: Optional[int]):
    cells = [c.strip() for c in line.split(",")]
    values = []
    for j, cell in enumerate(cells, 1):
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"invalid number {cell!r}", row=lineno, column=j) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {cell!r}", row=lineno, column=j)
        values.append(v)
    if width is not None and len(values) != width:
        raise ParseError(f"expected {width} columns, found {len(values)}", row=lineno)
    return values


def stream_rows(lines) -> Iterator[list]:
    """Yield observations from CSV lines; a non-numeric first line is a header."""
    width = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            values = _parse_line(line, lineno, width)
        except ParseError:
            if width is None and lineno == 1:
                continue  # header
            raise
        width = len(values)
        yield values


def _config(args) -> RcpdConfig:
    try:
        return RcpdConfig(alpha=args.alpha, gamma=args.gamma, l=args.l, d=args.d, ms0=args.ms, u=args.u,
                          variant=Variant(args.variant), trend=Trend(args.trend), h=args.h,
                          p1=args.p1, p2=args.p2, p3=args.p3, validate=not args.no_validate)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_monitor(args) -> int:
    config = _config(args)
    table = _cache_table(args)

    def on_event(ev: DetectionEvent):
        _emit({"event": "cp", **ev.as_dict()})

    def on_direction(ev: DetectionEvent):
        _emit({"event": "direction", "index": ev.index, "direction": ev.cp.direction.value})

    det = RealTimeDetector(config, table, on_event=on_event, on_direction=on_direction)
    if args.synthetic:
        rows = (row.tolist() for row in parse_synthetic(args.synthetic).data)
    elif args.file in (None, "-"):
        rows = stream_rows(sys.stdin)
    else:
        try:
            fh = open(args.file, encoding="utf-8")
        except OSError as exc:
            raise InputError(str(exc)) from exc
        rows = stream_rows(fh)
    for row in rows:
        det.push(row[0] if len(row) == 1 else row)
    det.close()
    for diag in det.diagnostics:
        log.info("index %d: %s", diag.index, diag.message)
    return EXIT_OK


def cmd_bench(args) -> int:
    table = _cache_table(args)
    arma = ArmaSpec(phi=args.phi, theta=args.theta, sigma=args.sigma, n=args.n)
    common = dict(reps=args.reps, seed=args.seed, cv_provider=table, alpha=args.alpha, arma=arma)
    if args.experiment == 1:
        report = experiment_segmentation(**common)
    elif args.experiment == 2:
        report = experiment_trend(**common, gamma=args.gamma, l=args.l, d=args.d)
    else:
        variants = (args.variant,) if args.variant else ("standard", "ratio")
        fn = experiment_single_cp if args.experiment == 3 else experiment_double_cp
        report = fn(**common, variant=variants, gamma=args.gamma, d=args.d, ms0=args.ms)
    sys.stdout.write(report.to_csv())
    sys.stdout.flush()
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(report.to_json() + "\n")
        except OSError as exc:
            raise InputError(f"cannot write {args.json}: {exc}") from exc
    return EXIT_OK


def _cv_one(table, kind, r, alpha, gamma):
    g = 0.0 if kind is Kind.OFFLINE else gamma
    req = table.request(kind, r=r, alpha=alpha, gamma=g)
    cached = table.lookup(req) is not None
    value = table.get_or_compute(req)
    return {"kind": kind.value, "r": r, "alpha": alpha, "gamma": g, "value": value, "cached": cached}


def cmd_cv(args) -> int:
    table = _cache_table(args)
    if args.warm:
        seen = set()
        for kind, r, alpha, gamma in itertools.product(Kind, WARM_DIMS, WARM_ALPHAS, WARM_GAMMAS):
            key = (kind, r, alpha, 0.0 if kind is Kind.OFFLINE else gamma)
            if key in seen:
                continue
            seen.add(key)
            _emit(_cv_one(table, *key))
        return EXIT_OK
    _emit(_cv_one(table, args.kind, args.r, args.alpha, args.gamma))
    return EXIT_OK


def _add_cache_flags(p):
    p.add_argument("--cv-cache", help="critical-value cache file (default: $RCPD_CV_CACHE or the user cache dir)")
    p.add_argument("--paths", type=_positive_int, default=20000, help="Monte Carlo paths per critical value")
    p.add_argument("--grid", type=_positive_int, default=1000, help="time steps per unit interval")
    p.add_argument("--t-max", type=float, default=10.0, help="monitoring horizon of the limit process")
    p.add_argument("--cv-seed", type=int, default=0, help="seed of the critical-value simulation")


def _add_detector_flags(p):
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--gamma", type=_gamma, default=0.25)
    p.add_argument("--l", type=_positive_int, default=50, help="monitoring window")
    p.add_argument("--d", type=int, default=50, help="distance kept after a detection")
    p.add_argument("--ms", type=_positive_int, default=200, help="end of the first training period")
    p.add_argument("--u", type=_positive_int, default=500, help="maximum training length")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="standard")
    p.add_argument("--trend", choices=[t.value for t in Trend], default="ts")
    p.add_argument("--h", type=int, default=0, help="post-change samples for the MACD indicator")
    p.add_argument("--p1", type=_positive_int, default=9)
    p.add_argument("--p2", type=_positive_int, default=12)
    p.add_argument("--p3", type=_positive_int, default=26)
    p.add_argument("--no-validate", action="store_true", help="plain binary segmentation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcpd", description="CUSUM change-point detection")
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offline", help="segment a stored series")
    p.add_argument("file", nargs="?", help="CSV file, or - for standard input")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--no-validate", action="store_true", help="plain binary segmentation")
    p.add_argument("--synthetic", help="generate the input, e.g. 'n=600,cps=300,mu=2,seed=1'")
    _add_cache_flags(p)
    p.set_defaults(func=cmd_offline)

    p = sub.add_parser("monitor", help="real-time detection, one NDJSON line per event")
    p.add_argument("file", nargs="?", default="-", help="CSV file, or - for standard input (default)")
    p.add_argument("--synthetic", help="generate the input stream instead of reading it")
    _add_detector_flags(p)
    _add_cache_flags(p)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("bench", help="run a synthetic experiment")
    p.add_argument("--experiment", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the report as JSON to this path")
    p.add_argument("--phi", type=float, default=0.3)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n", type=_positive_int, default=600)
    _add_detector_flags(p)
    p.set_defaults(variant=None)
    _add_cache_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("cv", help="print (and cache) a critical value")
    p.add_argument("--kind", type=_kind, default=Kind.OFFLINE, help="offline, online-ct or online-rt")
    p.add_argument("--r", type=_positive_int, default=1)
    p.add_argument("--gamma", type=_gamma, default=0.0)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--warm", action="store_true", help="populate the standard grid")
    _add_cache_flags(p)
    p.set_defaults(func=cmd_cv)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="rcpd: %(message)s", stream=sys.stderr)
    if getattr(args, "cv_cache", None) is None and os.environ.get("RCPD_CV_CACHE"):
        args.cv_cache = os.environ["RCPD_CV_CACHE"]
    try:
        return args.func(args)
    except (InputError, ParseError) as exc:
        print(f"rcpd: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"rcpd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # raised by the detector for a malformed observation
        print(f"rcpd: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
