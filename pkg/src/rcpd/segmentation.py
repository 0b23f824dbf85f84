"""Standard and modified binary segmentation for multiple mean changes."""

from __future__ import annotations

from typing import List, Optional

from .critical_values import Kind
from .offline import test_block
from .series import Segment, as_series


def _resolve_cv(series, cv_provider, alpha, cv):
    if cv is not None:
        return cv
    if cv_provider is None:
        raise ValueError("either cv or cv_provider is required")
    return cv_provider(Kind.OFFLINE, r=series.dim, alpha=alpha)


def _bs(data, start, end, cv, out):
    # iterative to keep deep recursions off the Python stack
    stack = [(start, end)]
    while stack:
        a, b = stack.pop()
        k = test_block(data[a - 1 : b], a, cv)
        if k is None:
            continue
        out.append(k)
        stack.append((k + 1, b))
        stack.append((a, k))


def binary_segmentation(series, seg: Optional[Segment] = None, cv_provider=None,
                        alpha: float = 0.05, cv: Optional[float] = None) -> List[int]:
    """Recursively split ``seg`` at each rejected off-line test.

    A rejection at ``k`` spawns searches on ``[start, k]`` and
    ``[k + 1, end]``.  Returns sorted absolute change indices.
    """
    series = as_series(series)
    seg = seg or series.full()
    seg.check_within(series.n)
    cv = _resolve_cv(series, cv_provider, alpha, cv)
    found = []
    _bs(series.data, seg.start, seg.end, cv, found)
    return sorted(set(found))


def validate_candidates(series, candidates, seg: Segment, cv: float) -> List[int]:
    """Single cross-validation pass over sorted ``candidates``.

    Candidate ``s_i`` survives only if the off-line test rejects on the
    window delimited by its neighbours ``s_{i-1}`` and ``s_{i+1}`` (segment
    bounds at the ends).  Survivors keep their original positions.
    """
    return _validate(series.data, candidates, seg.start, seg.end, cv)


def _validate(data, candidates, start, end, cv):
    bounds = [start, *candidates, end]
    kept = []
    for i in range(1, len(bounds) - 1):
        a, b = bounds[i - 1], bounds[i + 1]
        if test_block(data[a - 1 : b], a, cv) is not None:
            kept.append(bounds[i])
    return kept


def modified_binary_segmentation(series, seg: Optional[Segment] = None, cv_provider=None,
                                 alpha: float = 0.05, cv: Optional[float] = None,
                                 return_candidates: bool = False):
    """Binary segmentation followed by one pairwise validation pass.

    With ``return_candidates=True`` the unvalidated binary-segmentation
    output is returned as well, as ``(validated, candidates)``.
    """
    series = as_series(series)
    seg = seg or series.full()
    seg.check_within(series.n)
    cv = _resolve_cv(series, cv_provider, alpha, cv)
    kept, candidates = segment_array(series.data, seg.start, seg.end, cv)
    if return_candidates:
        return kept, candidates
    return kept


def segment_array(data, start: int, end: int, cv: float, validate: bool = True):
    """Segmentation of rows ``start..end`` of a raw ``(N, r)`` array.

    Returns ``(changes, candidates)``: the validated indices (or the plain
    binary-segmentation output when ``validate`` is false) and the
    unvalidated candidates.
    """
    found = []
    _bs(data, start, end, cv, found)
    candidates = sorted(set(found))
    if not validate or not candidates:
        return candidates, candidates
    return _validate(data, candidates, start, end, cv), candidates
