"""Non-parametric CUSUM change-point detection for weakly dependent series."""

from .covariance import LongRunCovariance, SingularMatrixError, autocovariance, bartlett_long_run, inverse_sqrt
from .critical_values import CriticalValueTable, CvRequest, Kind, simulate
from .detector import DetectionEvent, Diagnostic, RealTimeDetector, replay, run
from .evaluation import (
    acf_summary,
    direction_baseline,
    dtw_distance,
    hurst_second_derivative,
    interim_times,
    magnitude_percentiles,
)
from .offline import OfflineResult, cusum_path, offline_statistic, offline_test
from .online import Monitor, UntrainableError, online_cp_index, train, weight_g
from .segmentation import binary_segmentation, modified_binary_segmentation
from .series import (
    ChangePoint,
    Direction,
    ParseError,
    RcpdConfig,
    Segment,
    TimeSeries,
    Trend,
    Variant,
    ingest_csv,
    to_csv,
)
from .trend import ema, macd, ti_f, ti_ts

__version__ = "0.1.0"

__all__ = [
    "LongRunCovariance", "SingularMatrixError", "autocovariance", "bartlett_long_run", "inverse_sqrt",
    "CriticalValueTable", "CvRequest", "Kind", "simulate",
    "DetectionEvent", "Diagnostic", "RealTimeDetector", "replay", "run",
    "acf_summary", "direction_baseline", "dtw_distance", "hurst_second_derivative", "interim_times",
    "magnitude_percentiles",
    "OfflineResult", "cusum_path", "offline_statistic", "offline_test",
    "Monitor", "UntrainableError", "online_cp_index", "train", "weight_g",
    "binary_segmentation", "modified_binary_segmentation",
    "ChangePoint", "Direction", "ParseError", "RcpdConfig", "Segment", "TimeSeries", "Trend", "Variant",
    "ingest_csv", "to_csv",
    "ema", "macd", "ti_f", "ti_ts",
]
