"""
Named relationships between labor force, inflation and unemployment.

PhillipsModel      UE(t) = intercept + slope * pi(t - lag)
LaggedLinearModel  y(t)  = A + B * r(t - t0)          (y is inflation or unemployment)
GeneralizedModel   pi(t) = D1 * r(t) + D2 * UE(t) + D3

r is the labor force change rate dLF/LF.
"""
from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError as SchemaValidationError

from core.calibration import CalibrationResult, ModelFamily, ModelSpec, SearchGrid, calibrate
from core.regression import DEFAULT_MAX_LAG, LagScanEntry, LinearFitResult, lag_search, ols
from core.series import AnnualSeries, Unit, align, change_rate, lag_shift, window
from models.schemas import ModelRecord, validate_model_record
from utils.exceptions import (
    InsufficientDataError,
    LfmKitError,
    ParseError,
    SpecificationError,
)

logger = logging.getLogger("lfmkit.models")

DEFAULT_PHILLIPS_WINDOW = (1982, 2006)


class Target(str, Enum):
    INFLATION = "inflation"
    UNEMPLOYMENT = "unemployment"


class FittedBy(str, Enum):
    OLS = "ols"
    CUMULATIVE = "cumulative"
    PRESET = "preset"


def _rate(labor_force: AnnualSeries) -> AnnualSeries:
    return change_rate(labor_force) if labor_force.unit.is_level else labor_force


@dataclass(frozen=True)
class PhillipsModel:
    slope: float
    intercept: float
    lag: int = 0
    fit: Optional[LinearFitResult] = None
    window: Optional[Tuple[int, int]] = None
    name: str = "phillips"
    note: str = ""
    scan: Tuple[LagScanEntry, ...] = ()
    fitted_by: FittedBy = FittedBy.OLS

    family = "phillips"

    def __post_init__(self):
        object.__setattr__(self, "fitted_by", FittedBy(self.fitted_by))
        if self.lag < 0:
            raise SpecificationError(f"Lag must be >= 0, got {self.lag}", error_code="BAD_MODEL_SPEC")

    def predict(self, inflation: AnnualSeries) -> AnnualSeries:
        shifted = lag_shift(inflation, self.lag)
        return AnnualSeries.from_array(
            shifted.start_year, self.intercept + self.slope * shifted.array,
            Unit.RATE, f"unemployment [{self.name}]"
        )


@dataclass(frozen=True)
class LaggedLinearModel:
    target: Target
    A: float
    B: float
    t0: int = 0
    fitted_by: FittedBy = FittedBy.OLS
    window: Optional[Tuple[int, int]] = None
    name: str = "lagged-linear"
    note: str = ""
    fit: Optional[LinearFitResult] = None
    calibration: Optional[CalibrationResult] = None
    scan: Tuple[LagScanEntry, ...] = ()

    family = "lagged_linear"

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        object.__setattr__(self, "fitted_by", FittedBy(self.fitted_by))
        if self.t0 < 0:
            raise SpecificationError(f"Lag must be >= 0, got {self.t0}", error_code="BAD_MODEL_SPEC")

    def predict(self, labor_force: AnnualSeries) -> AnnualSeries:
        shifted = lag_shift(_rate(labor_force), self.t0)
        return AnnualSeries.from_array(
            shifted.start_year, self.A + self.B * shifted.array,
            Unit.RATE, f"{self.target.value} [{self.name}]"
        )


@dataclass(frozen=True)
class GeneralizedModel:
    D1: float
    D2: float
    D3: float
    window: Optional[Tuple[int, int]] = None
    cumulative_start: Optional[int] = None
    name: str = "generalized"
    note: str = ""
    calibration: Optional[CalibrationResult] = None
    fitted_by: FittedBy = FittedBy.CUMULATIVE

    family = "generalized"
    target = Target.INFLATION

    def __post_init__(self):
        object.__setattr__(self, "fitted_by", FittedBy(self.fitted_by))
        if self.fitted_by is FittedBy.OLS:
            raise SpecificationError("Generalized model is fitted by cumulative matching only",
                                     error_code="BAD_MODEL_SPEC")

    def predict(self, labor_force: AnnualSeries, unemployment: AnnualSeries) -> AnnualSeries:
        pair = align(_rate(labor_force), unemployment)
        return AnnualSeries.from_array(
            pair.common_window[0],
            self.D1 * pair.x.array + self.D2 * pair.y.array + self.D3,
            Unit.RATE, f"inflation [{self.name}]"
        )


Model = Union[PhillipsModel, LaggedLinearModel, GeneralizedModel]


@dataclass(frozen=True)
class Evaluation:
    predicted: AnnualSeries
    residuals: Optional[AnnualSeries] = None
    residual_stdev: Optional[float] = None
    residual_max_abs: Optional[float] = None


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def fit_phillips(inflation: AnnualSeries, unemployment: AnnualSeries,
                 window: Tuple[int, int] = DEFAULT_PHILLIPS_WINDOW,
                 max_lag: int = DEFAULT_MAX_LAG) -> PhillipsModel:
    """Lag-searched OLS of unemployment on inflation."""
    result = lag_search(inflation, unemployment, max_lag, fit_window=window, relation="phillips")
    return PhillipsModel(
        slope=result.fit.slope,
        intercept=result.fit.intercept,
        lag=result.best_lag,
        fit=result.fit,
        window=result.fit.period,
        name="phillips",
        note="ols fit",
        scan=result.scan,
    )


def fit_lagged(target_series: AnnualSeries, labor_force: AnnualSeries, target: Target | str,
               window: Tuple[int, int], max_lag: int = DEFAULT_MAX_LAG,
               estimator: FittedBy | str = FittedBy.CUMULATIVE,
               search: SearchGrid | None = None,
               cumulative_start: int | None = None) -> LaggedLinearModel:
    """Fit y = A + B * r(t - t0) by lag-searched OLS or by cumulative matching."""
    target = Target(target)
    estimator = FittedBy(estimator)
    rate = _rate(labor_force)
    relation = f"{target.value}-lf"

    if estimator is FittedBy.OLS:
        result = lag_search(rate, target_series, max_lag, fit_window=window, relation=relation)
        return LaggedLinearModel(
            target=target, A=result.fit.intercept, B=result.fit.slope, t0=result.best_lag,
            fitted_by=FittedBy.OLS, window=result.fit.period, name=relation,
            note="ols fit", fit=result.fit, scan=result.scan,
        )
    if estimator is not FittedBy.CUMULATIVE:
        raise SpecificationError(f"Cannot fit with estimator '{estimator.value}'", error_code="BAD_MODEL_SPEC")

    spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force, target_series, window, cumulative_start)
    calibration = calibrate(spec, search or SearchGrid.default(ModelFamily.SINGLE_DRIVER, (0, max_lag)))

    # Report the classical fit at the chosen lag beside the cumulative one
    try:
        diagnostic = ols(lag_shift(rate, calibration.lag), _window(target_series, window))
    except LfmKitError as e:
        logger.warning(f"OLS diagnostic unavailable at lag {calibration.lag}: {e.message}")
        diagnostic = None

    return LaggedLinearModel(
        target=target, A=calibration.coefficients["A"], B=calibration.coefficients["B"],
        t0=calibration.lag, fitted_by=FittedBy.CUMULATIVE, window=tuple(window), name=relation,
        note=f"cumulative fit from {spec.cumulative_start}", fit=diagnostic, calibration=calibration,
    )


def fit_generalized(inflation: AnnualSeries, labor_force: AnnualSeries, unemployment: AnnualSeries,
                    window: Tuple[int, int], cumulative_start: int | None = None,
                    search: SearchGrid | None = None) -> GeneralizedModel:
    """Fit pi = D1 * r + D2 * UE + D3 by cumulative matching."""
    spec = ModelSpec(ModelFamily.GENERALIZED, labor_force, inflation, window,
                     cumulative_start, unemployment)
    calibration = calibrate(spec, search)
    return GeneralizedModel(
        D1=calibration.coefficients["D1"], D2=calibration.coefficients["D2"],
        D3=calibration.coefficients["D3"], window=tuple(window),
        cumulative_start=spec.cumulative_start, name="generalized",
        note=f"cumulative fit from {spec.cumulative_start}", calibration=calibration,
    )


def _window(s: AnnualSeries, years: Optional[Tuple[int, int]]) -> AnnualSeries:
    return window(s, *years) if years else s


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _require(series: Optional[AnnualSeries], name: str, model: Model) -> AnnualSeries:
    if series is None:
        raise SpecificationError(
            f"{model.family} model '{model.name}' needs a {name} series", error_code="BAD_MODEL_SPEC"
        )
    return series


def predict(model: Model, *, inflation: AnnualSeries | None = None,
            labor_force: AnnualSeries | None = None,
            unemployment: AnnualSeries | None = None) -> AnnualSeries:
    if isinstance(model, PhillipsModel):
        return model.predict(_require(inflation, "inflation", model))
    if isinstance(model, LaggedLinearModel):
        return model.predict(_require(labor_force, "labor force", model))
    return model.predict(_require(labor_force, "labor force", model),
                         _require(unemployment, "unemployment", model))


def evaluate(model: Model, *, inflation: AnnualSeries | None = None,
             labor_force: AnnualSeries | None = None,
             unemployment: AnnualSeries | None = None,
             observed: AnnualSeries | None = None,
             years: Tuple[int, int] | None = None) -> Evaluation:
    """Predicted series, plus residual summary when an observed series is given."""
    predicted = _window(predict(model, inflation=inflation, labor_force=labor_force,
                                unemployment=unemployment), years)
    if observed is None:
        return Evaluation(predicted)

    pair = align(predicted, _window(observed, years))
    residuals = pair.y.array - pair.x.array
    stdev = float(np.std(residuals, ddof=1)) if residuals.size > 1 else 0.0
    return Evaluation(
        predicted=predicted,
        residuals=AnnualSeries.from_array(pair.common_window[0], residuals, Unit.RATE, "residual"),
        residual_stdev=stdev,
        residual_max_abs=float(np.max(np.abs(residuals))),
    )


def regime_residuals(evaluation: Evaluation, split_year: int) -> Tuple[Optional[float], Optional[float]]:
    """Residual stdev before split_year and from split_year on."""
    if evaluation.residuals is None:
        raise InsufficientDataError("Evaluation has no residuals", error_code="INSUFFICIENT_DATA")
    res = evaluation.residuals
    values = res.array
    cut = min(max(split_year - res.start_year, 0), len(values))

    def stdev(part: np.ndarray) -> Optional[float]:
        return float(np.std(part, ddof=1)) if part.size > 1 else None

    return stdev(values[:cut]), stdev(values[cut:])


# ---------------------------------------------------------------------------
# Derived models
# ---------------------------------------------------------------------------

def intercept_adjust(model: PhillipsModel, delta: float) -> PhillipsModel:
    """Shift the free term, recording the adjustment in the note."""
    if delta == 0:
        return model
    entry = f"intercept {delta:+g}"
    return replace(model, intercept=model.intercept + delta,
                   note=f"{model.note}; {entry}" if model.note else entry)


def implied_phillips(inflation_model: LaggedLinearModel,
                     unemployment_model: LaggedLinearModel) -> PhillipsModel:
    """Eliminate r between pi = A1 + B1 r and UE = A2 + B2 r (equal lags)."""
    if inflation_model.target is not Target.INFLATION or unemployment_model.target is not Target.UNEMPLOYMENT:
        raise SpecificationError("Need an inflation model and an unemployment model", error_code="BAD_MODEL_SPEC")
    if inflation_model.t0 != unemployment_model.t0:
        raise SpecificationError(
            f"Lags differ ({inflation_model.t0} vs {unemployment_model.t0})", error_code="BAD_MODEL_SPEC"
        )
    if inflation_model.B == 0:
        raise SpecificationError("Inflation model has zero slope", error_code="BAD_MODEL_SPEC")

    ratio = unemployment_model.B / inflation_model.B
    return PhillipsModel(
        slope=ratio,
        intercept=unemployment_model.A - ratio * inflation_model.A,
        lag=0,
        name=f"implied[{inflation_model.name},{unemployment_model.name}]",
        note="derived from labor force models",
        fitted_by=inflation_model.fitted_by,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_RECORD_ORDER = ("name", "family", "target", "slope", "intercept", "A", "B", "D1", "D2", "D3",
                 "lag", "window", "cumulative_start", "fitted_by", "note")


def model_record(model: Model) -> ModelRecord:
    fields = {"name": model.name, "family": model.family, "window": model.window,
              "note": model.note, "fitted_by": model.fitted_by.value}
    if isinstance(model, PhillipsModel):
        fields.update(slope=model.slope, intercept=model.intercept, lag=model.lag)
    elif isinstance(model, LaggedLinearModel):
        fields.update(target=model.target.value, A=model.A, B=model.B, lag=model.t0)
    else:
        fields.update(D1=model.D1, D2=model.D2, D3=model.D3, cumulative_start=model.cumulative_start)
    return ModelRecord(**fields)


def dump_model(model: Model) -> str:
    """Key-value text; floats use shortest round-trip form."""
    record = model_record(model)
    lines = []
    for key in _RECORD_ORDER:
        value = getattr(record, key)
        if value is None or value == "":
            continue
        if key == "window":
            value = f"{value[0]}:{value[1]}"
        elif key == "note":
            value = json.dumps(value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def load_model(text: str) -> Model:
    values = dotenv_values(stream=io.StringIO(text), interpolate=False)
    try:
        record = validate_model_record(values)
    except SchemaValidationError as e:
        raise ParseError(f"Invalid model file: {e.errors()[0]['msg']}", error_code="MALFORMED_MODEL",
                         details={"errors": [err["msg"] for err in e.errors()]})

    common = {"window": record.window, "name": record.name, "note": record.note}
    if record.family == "phillips":
        return PhillipsModel(slope=record.slope, intercept=record.intercept, lag=record.lag,
                             fitted_by=record.fitted_by or FittedBy.PRESET, **common)
    if record.family == "lagged_linear":
        return LaggedLinearModel(target=record.target, A=record.A, B=record.B, t0=record.lag,
                                 fitted_by=record.fitted_by or FittedBy.PRESET, **common)
    return GeneralizedModel(D1=record.D1, D2=record.D2, D3=record.D3,
                            cumulative_start=record.cumulative_start,
                            fitted_by=record.fitted_by or FittedBy.PRESET, **common)
