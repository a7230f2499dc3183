"""
Coefficient estimation by matching cumulative curves.

The objective is the RMS deviation between the running sums of observed
and predicted annual values. Search is deterministic: an exhaustive coarse
grid, then coordinate refinement with step halving around the best node,
then the bounded linear least-squares solution as a last candidate
(predictions are linear in the coefficients, so the cumulative objective is
a box-constrained least-squares problem). The lag is chosen by an outer loop.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.optimize import lsq_linear

from core.series import AnnualSeries, Unit, change_rate, window
from utils.exceptions import (
    AlignmentError,
    DataError,
    RangeError,
    SpecificationError,
)
from utils.logger import PipelineLogger

logger = logging.getLogger("lfmkit.calibration")

DEFAULT_TOLERANCE = 1e-5
SLOPE_BOUNDS = (-5.0, 5.0)
INTERCEPT_BOUNDS = (-0.1, 0.1)
SLOPE_STEP = 0.1
INTERCEPT_STEP = 0.005

# Grid nodes evaluated per vectorized batch
_CHUNK = 8192
# Safety cap on accepted moves at one step size
_MAX_MOVES_PER_LEVEL = 100_000


class ModelFamily(str, Enum):
    SINGLE_DRIVER = "single_driver"
    GENERALIZED = "generalized"

    @property
    def coefficient_names(self) -> Tuple[str, ...]:
        if self is ModelFamily.SINGLE_DRIVER:
            return ("A", "B")
        return ("D1", "D2", "D3")


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: the driver, the target and the windows.

    single_driver: target(t) = A + B * r(t - lag)
    generalized:   target(t) = D1 * r(t) + D2 * UE(t) + D3
    where r is the labor force change rate (computed when labor_force
    holds levels).
    """

    family: ModelFamily
    labor_force: AnnualSeries
    target: AnnualSeries
    fit_window: Tuple[int, int]
    cumulative_start: Optional[int] = None
    unemployment: Optional[AnnualSeries] = None

    def __post_init__(self):
        object.__setattr__(self, "family", ModelFamily(self.family))
        first, last = self.fit_window
        if first > last:
            raise SpecificationError(
                f"Fit window {self.fit_window} is reversed", error_code="BAD_MODEL_SPEC"
            )
        if self.cumulative_start is None:
            object.__setattr__(self, "cumulative_start", first)
        elif not first <= self.cumulative_start <= last:
            raise SpecificationError(
                f"Cumulative start {self.cumulative_start} outside fit window {self.fit_window}",
                error_code="BAD_MODEL_SPEC"
            )
        if self.family is ModelFamily.GENERALIZED and self.unemployment is None:
            raise SpecificationError(
                "Generalized model needs an unemployment series", error_code="BAD_MODEL_SPEC"
            )

    @property
    def coefficient_names(self) -> Tuple[str, ...]:
        return self.family.coefficient_names

    @property
    def driver_rate(self) -> AnnualSeries:
        if self.labor_force.unit.is_level:
            return change_rate(self.labor_force)
        return self.labor_force

    def design(self, lag: int = 0) -> np.ndarray:
        """Regressor matrix over fit_window, columns ordered like coefficient_names."""
        first, last = self.fit_window
        rate = self.driver_rate
        if lag < 0:
            raise SpecificationError(f"Lag must be >= 0, got {lag}", error_code="BAD_MODEL_SPEC")
        try:
            r = window(rate, first - lag, last - lag).array
            if self.family is ModelFamily.SINGLE_DRIVER:
                return np.column_stack([np.ones_like(r), r])
            if lag != 0:
                raise SpecificationError(
                    "Generalized model has no lag", error_code="BAD_MODEL_SPEC"
                )
            ue = window(self.unemployment, first, last).array
        except RangeError as e:
            raise RangeError(
                f"Driver coverage gap at lag {lag}: {e.message}",
                error_code="OUT_OF_RANGE",
                details={**e.details, "lag": lag}
            )
        return np.column_stack([r, ue, np.ones_like(r)])

    def observed(self) -> AnnualSeries:
        return window(self.target, *self.fit_window)


@dataclass(frozen=True)
class CoefficientGrid:
    """One search axis: nodes lower, lower + step, ... <= upper."""

    name: str
    lower: float
    upper: float
    step: float

    def nodes(self) -> np.ndarray:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper) and math.isfinite(self.step)):
            raise SpecificationError(f"Non-finite grid for {self.name}", error_code="EMPTY_GRID")
        if self.step <= 0 or self.upper < self.lower:
            raise SpecificationError(
                f"Empty grid for {self.name}: [{self.lower}, {self.upper}] step {self.step}",
                error_code="EMPTY_GRID"
            )
        count = int(math.floor((self.upper - self.lower) / self.step + 1e-9)) + 1
        return self.lower + self.step * np.arange(count)


@dataclass(frozen=True)
class SearchGrid:
    axes: Tuple[CoefficientGrid, ...]
    lag_range: Tuple[int, int] = (0, 0)
    tolerance: float = DEFAULT_TOLERANCE

    @classmethod
    def default(cls, family: ModelFamily | str, lag_range: Tuple[int, int] = (0, 0)) -> "SearchGrid":
        family = ModelFamily(family)
        slope = lambda name: CoefficientGrid(name, *SLOPE_BOUNDS, SLOPE_STEP)
        free = lambda name: CoefficientGrid(name, *INTERCEPT_BOUNDS, INTERCEPT_STEP)
        if family is ModelFamily.SINGLE_DRIVER:
            return cls((free("A"), slope("B")), lag_range)
        return cls((slope("D1"), slope("D2"), free("D3")), (0, 0))

    @property
    def lower(self) -> np.ndarray:
        return np.array([a.lower for a in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([a.upper for a in self.axes])


@dataclass(frozen=True)
class TraceEntry:
    lag: int
    coefficients: Tuple[float, ...]
    objective: float
    stage: str


@dataclass(frozen=True)
class CalibrationResult:
    family: ModelFamily
    coefficients: Mapping[str, float]
    lag: int
    objective: float
    annual_rms: float
    trace: Tuple[TraceEntry, ...]
    grid: SearchGrid
    evaluations: int = 0

    def coefficient_tuple(self) -> Tuple[float, ...]:
        return tuple(self.coefficients[name] for name in self.family.coefficient_names)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def _coefficient_vector(spec: ModelSpec, coefficients) -> np.ndarray:
    names = spec.coefficient_names
    if isinstance(coefficients, Mapping):
        if set(coefficients) != set(names):
            raise SpecificationError(
                f"{spec.family.value} expects coefficients {names}, got {tuple(coefficients)}",
                error_code="ARITY_MISMATCH"
            )
        return np.array([float(coefficients[n]) for n in names])
    values = np.asarray(coefficients, dtype=float).ravel()
    if values.size != len(names):
        raise SpecificationError(
            f"{spec.family.value} expects {len(names)} coefficients, got {values.size}",
            error_code="ARITY_MISMATCH"
        )
    return values


def predict_series(spec: ModelSpec, coefficients, lag: int = 0) -> AnnualSeries:
    """Evaluate the model pointwise over fit_window."""
    beta = _coefficient_vector(spec, coefficients)
    first, _ = spec.fit_window
    return AnnualSeries.from_array(first, spec.design(lag) @ beta, Unit.RATE,
                                   f"predicted {spec.target.label}".strip())


def _check_same_window(observed: AnnualSeries, predicted: AnnualSeries, from_year: int) -> None:
    if observed.end_year != predicted.end_year or not (
        observed.covers(from_year, from_year) and predicted.covers(from_year, from_year)
    ):
        raise AlignmentError(
            f"Observed {observed.span} and predicted {predicted.span} do not both cover "
            f"{from_year}..end with the same end year",
            error_code="WINDOW_MISMATCH",
            details={"observed": list(observed.span), "predicted": list(predicted.span)}
        )


def cumulative_rms(observed: AnnualSeries, predicted: AnnualSeries, from_year: int) -> float:
    """RMS of the difference between running sums started at from_year."""
    _check_same_window(observed, predicted, from_year)
    end = observed.end_year
    gap = np.cumsum(window(observed, from_year, end).array - window(predicted, from_year, end).array)
    return float(np.sqrt(np.mean(gap ** 2)))


def annual_rms(observed: AnnualSeries, predicted: AnnualSeries) -> float:
    """RMS of annual differences over the common window (diagnostic only)."""
    _check_same_window(observed, predicted, max(observed.start_year, predicted.start_year))
    first = max(observed.start_year, predicted.start_year)
    end = observed.end_year
    gap = window(observed, first, end).array - window(predicted, first, end).array
    return float(np.sqrt(np.mean(gap ** 2)))


class _CumulativeObjective:
    """Cumulative RMS for a fixed spec and lag, vectorized over coefficient rows."""

    def __init__(self, spec: ModelSpec, lag: int):
        offset = spec.cumulative_start - spec.fit_window[0]
        self.design = spec.design(lag)
        self.observed = spec.observed().array
        self.cum_design = np.cumsum(self.design[offset:], axis=0)
        self.cum_observed = np.cumsum(self.observed[offset:])
        self.evaluations = 0

    def __call__(self, betas: np.ndarray) -> np.ndarray:
        betas = np.atleast_2d(betas)
        self.evaluations += betas.shape[0]
        gaps = self.cum_observed[:, None] - self.cum_design @ betas.T
        with np.errstate(over="ignore", invalid="ignore"):
            return np.sqrt(np.mean(gaps ** 2, axis=0))

    def one(self, beta: np.ndarray) -> float:
        return float(self(beta)[0])

    def bounded_least_squares(self, lower: np.ndarray, upper: np.ndarray) -> Optional[np.ndarray]:
        """Exact minimizer inside the box; axes with lower == upper stay fixed."""
        if not (np.all(np.isfinite(self.cum_design)) and np.all(np.isfinite(self.cum_observed))):
            return None
        free = lower < upper
        beta = lower.astype(float).copy()
        target = self.cum_observed - self.cum_design[:, ~free] @ beta[~free]
        if np.any(free):
            result = lsq_linear(self.cum_design[:, free], target,
                                bounds=(lower[free], upper[free]), method="bvls")
            beta[free] = np.clip(result.x, lower[free], upper[free])
        return beta


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

def _grid_search(objective: _CumulativeObjective, grid: SearchGrid) -> Tuple[np.ndarray, float]:
    axes = [axis.nodes() for axis in grid.axes]
    best_beta: Optional[np.ndarray] = None
    best_value = math.inf

    # itertools.product order is fixed, so the first minimum found is stable
    nodes = itertools.product(*axes)
    while True:
        batch = np.array(list(itertools.islice(nodes, _CHUNK)), dtype=float)
        if batch.size == 0:
            break
        values = objective(batch)
        values = np.where(np.isfinite(values), values, math.inf)
        i = int(np.argmin(values))
        if values[i] < best_value:
            best_value, best_beta = float(values[i]), batch[i].copy()

    if best_beta is None:
        raise DataError(
            "Objective is non-finite at every grid node", error_code="NON_FINITE_OBJECTIVE"
        )
    return best_beta, best_value


def _refine(objective: _CumulativeObjective, grid: SearchGrid, beta: np.ndarray, value: float,
            lag: int, trace: List[TraceEntry]) -> Tuple[np.ndarray, float]:
    """Coordinate moves of +/- step; halve all steps when no move improves."""
    lower, upper = grid.lower, grid.upper
    steps = np.array([axis.step for axis in grid.axes]) / 2.0

    while np.any(steps >= grid.tolerance):
        moves = 0
        improved = True
        while improved and moves < _MAX_MOVES_PER_LEVEL:
            improved = False
            for i in range(beta.size):
                for sign in (1.0, -1.0):
                    candidate = beta.copy()
                    candidate[i] += sign * steps[i]
                    if candidate[i] < lower[i] or candidate[i] > upper[i]:
                        continue
                    candidate_value = objective.one(candidate)
                    if candidate_value < value:
                        beta, value = candidate, candidate_value
                        trace.append(TraceEntry(lag, tuple(beta.tolist()), value, "refine"))
                        improved = True
                        moves += 1
                        break
        steps = steps / 2.0

    return beta, value


def _calibrate_at_lag(spec: ModelSpec, grid: SearchGrid, lag: int,
                      trace: List[TraceEntry]) -> Tuple[np.ndarray, float, int]:
    objective = _CumulativeObjective(spec, lag)

    beta, value = _grid_search(objective, grid)
    trace.append(TraceEntry(lag, tuple(beta.tolist()), value, "grid"))

    beta, value = _refine(objective, grid, beta, value, lag, trace)

    polished = objective.bounded_least_squares(grid.lower, grid.upper)
    if polished is not None:
        polished_value = objective.one(polished)
        if polished_value < value:
            beta, value = polished, polished_value
            trace.append(TraceEntry(lag, tuple(beta.tolist()), value, "polish"))

    return beta, value, objective.evaluations


def calibrate(spec: ModelSpec, search: SearchGrid | None = None) -> CalibrationResult:
    """Minimize cumulative RMS over coefficients and the lag range."""
    grid = search or SearchGrid.default(spec.family)
    names = spec.coefficient_names
    if tuple(axis.name for axis in grid.axes) != names:
        raise SpecificationError(
            f"Search axes {[a.name for a in grid.axes]} do not match coefficients {names}",
            error_code="ARITY_MISMATCH"
        )
    if grid.tolerance <= 0:
        raise SpecificationError("Tolerance must be positive", error_code="EMPTY_GRID")
    lag_first, lag_last = grid.lag_range
    if lag_first < 0 or lag_last < lag_first:
        raise SpecificationError(f"Invalid lag range {grid.lag_range}", error_code="EMPTY_GRID")
    if spec.family is ModelFamily.GENERALIZED and grid.lag_range != (0, 0):
        raise SpecificationError("Generalized model has no lag", error_code="BAD_MODEL_SPEC")

    events = PipelineLogger("calibration")
    trace: List[TraceEntry] = []
    best: Optional[Tuple[np.ndarray, float, int]] = None
    evaluations = 0

    for lag in range(lag_first, lag_last + 1):
        try:
            beta, value, count = _calibrate_at_lag(spec, grid, lag, trace)
        except RangeError as e:
            events.log_lag_skipped(lag, e.message)
            continue
        evaluations += count
        events.log_calibration(spec.family.value, lag, value, count)
        if best is None or value < best[1]:
            best = (beta, value, lag)

    if best is None:
        raise RangeError(
            f"No lag in {lag_first}..{lag_last} is covered by the driver series",
            error_code="OUT_OF_RANGE",
            details={"lag_range": [lag_first, lag_last]}
        )

    beta, value, lag = best
    coefficients: Dict[str, float] = {name: float(v) for name, v in zip(names, beta)}
    predicted = predict_series(spec, beta, lag)

    return CalibrationResult(
        family=spec.family,
        coefficients=coefficients,
        lag=lag,
        objective=value,
        annual_rms=annual_rms(spec.observed(), predicted),
        trace=tuple(trace),
        grid=grid,
        evaluations=evaluations,
    )
