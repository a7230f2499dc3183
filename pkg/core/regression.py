"""
Ordinary least squares with classical diagnostics, and integer-lag search.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import statsmodels.api as sm

from core.series import AnnualSeries, align, lag_shift, window
from utils.exceptions import (
    AlignmentError,
    DegenerateRegressorError,
    InsufficientDataError,
    RangeError,
    range_error,
)
from utils.logger import PipelineLogger

logger = logging.getLogger("lfmkit.regression")

DEFAULT_MAX_LAG = 6
MIN_OBSERVATIONS = 3


@dataclass(frozen=True)
class LinearFitResult:
    """y = intercept + slope * x with classical OLS diagnostics."""

    slope: float
    intercept: float
    slope_stderr: Optional[float]
    intercept_stderr: Optional[float]
    r_squared: float
    residual_stdev: float
    n: int
    period: Tuple[int, int]


@dataclass(frozen=True)
class LagScanEntry:
    lag: int
    r_squared: float
    n: int


@dataclass(frozen=True)
class LagSearchResult:
    best_lag: int
    fit: LinearFitResult
    scan: Tuple[LagScanEntry, ...]


def ols(x: AnnualSeries, y: AnnualSeries) -> LinearFitResult:
    """Regress y on x over their common years."""
    pair = align(x, y)
    n = len(pair)
    if n < MIN_OBSERVATIONS:
        raise InsufficientDataError(
            f"OLS needs at least {MIN_OBSERVATIONS} overlapping years, got {n}",
            error_code="INSUFFICIENT_DATA",
            details={"n": n, "window": list(pair.common_window)}
        )

    xv, yv = pair.x.array, pair.y.array
    if np.ptp(xv) == 0.0:
        raise DegenerateRegressorError(
            f"Regressor {x.label or 'x'} is constant over {pair.common_window}",
            error_code="CONSTANT_REGRESSOR",
            details={"window": list(pair.common_window)}
        )

    results = sm.OLS(yv, sm.add_constant(xv, has_constant="add")).fit()
    intercept, slope = (float(v) for v in results.params)

    ssr = float(results.ssr)
    sst = float(results.centered_tss)
    # Constant y is reproduced exactly by a zero slope
    r_squared = 1.0 - ssr / sst if sst > 0.0 else 1.0
    r_squared = min(1.0, max(0.0, r_squared))

    intercept_se, slope_se = (float(v) for v in results.bse)
    if not (math.isfinite(slope_se) and math.isfinite(intercept_se)):
        slope_se = intercept_se = None

    return LinearFitResult(
        slope=slope,
        intercept=intercept,
        slope_stderr=slope_se,
        intercept_stderr=intercept_se,
        r_squared=r_squared,
        residual_stdev=math.sqrt(ssr / (n - 2)),
        n=n,
        period=pair.common_window,
    )


def lag_search(x: AnnualSeries, y: AnnualSeries, max_lag: int = DEFAULT_MAX_LAG,
               fit_window: Tuple[int, int] | None = None,
               relation: str = "y~x") -> LagSearchResult:
    """Regress y(t) on x(t - lag) for lag = 0..max_lag; keep the best R^2.

    Ties go to the smaller lag. When fit_window is given, y must cover it and
    each lag is tried only if the shifted x covers it too (x may reach back
    before the window start). RangeError when no lag does.
    """
    if max_lag < 0:
        raise RangeError(f"max_lag must be >= 0, got {max_lag}", error_code="OUT_OF_RANGE")

    events = PipelineLogger("regression")
    target = window(y, *fit_window) if fit_window else y

    scan: List[LagScanEntry] = []
    best: Optional[Tuple[int, LinearFitResult]] = None
    covered = 0

    for lag in range(max_lag + 1):
        shifted = lag_shift(x, lag)
        if fit_window and not shifted.covers(*fit_window):
            events.log_lag_skipped(lag, f"regressor {shifted.span} does not cover {fit_window}")
            continue
        covered += 1
        try:
            fit = ols(shifted, target)
        except (InsufficientDataError, AlignmentError, DegenerateRegressorError) as e:
            events.log_lag_skipped(lag, e.message)
            continue
        scan.append(LagScanEntry(lag, fit.r_squared, fit.n))
        if best is None or fit.r_squared > best[1].r_squared:
            best = (lag, fit)

    if covered == 0:
        raise range_error(fit_window[0], fit_window[1], x.span, x.label or "regressor")
    if best is None:
        raise InsufficientDataError(
            f"No lag in 0..{max_lag} leaves {MIN_OBSERVATIONS} usable observations",
            error_code="INSUFFICIENT_DATA",
            details={"max_lag": max_lag}
        )

    best_lag, fit = best
    events.log_fit(relation, best_lag, fit.r_squared, fit.n)
    return LagSearchResult(best_lag=best_lag, fit=fit, scan=tuple(scan))
