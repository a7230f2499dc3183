"""
Forward simulation: population x participation -> labor force -> change rate
-> unemployment and inflation paths.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError as SchemaValidationError

from core.ingestion import DatasetKey, DatasetRegistry
from core.models import GeneralizedModel, LaggedLinearModel, Model, Target, load_model
from core.presets import PresetManager
from core.series import AnnualSeries, Unit, change_rate, scale, window
from models.schemas import ScenarioConfig, validate_scenario
from utils.exceptions import ConfigurationError, DomainError, SpecificationError
from utils.logger import PipelineLogger

logger = logging.getLogger("lfmkit.projection")

DEFAULT_HORIZON = (2007, 2050)
DEFAULT_PARTICIPATION_RATE = 0.521

InflationModel = Union[LaggedLinearModel, GeneralizedModel]


def _check_rate(value: float, year: int | None = None) -> None:
    if not 0.0 < value <= 1.0:
        where = f" in {year}" if year is not None else ""
        raise DomainError(
            f"Participation rate {value}{where} outside (0, 1]",
            error_code="PARTICIPATION_OUT_OF_RANGE",
            details={"value": value, "year": year}
        )


def _model_lag(model: Model) -> int:
    return model.t0 if isinstance(model, LaggedLinearModel) else 0


@dataclass(frozen=True)
class ProjectionScenario:
    """Inputs of one forecast.

    anchor holds observed labor force levels; projected years start the
    year after the anchor ends, so the first projected change rate is
    taken against the last observed level.
    """

    population: AnnualSeries
    inflation_model: InflationModel
    unemployment_model: LaggedLinearModel
    participation: Union[float, AnnualSeries] = DEFAULT_PARTICIPATION_RATE
    horizon: Tuple[int, int] = DEFAULT_HORIZON
    anchor: Optional[AnnualSeries] = None
    alternative_inflation_models: Tuple[InflationModel, ...] = ()
    name: str = "scenario"

    def __post_init__(self):
        first, last = self.horizon
        if first > last:
            raise SpecificationError(f"Horizon {self.horizon} is reversed", error_code="BAD_MODEL_SPEC")
        if not isinstance(self.participation, AnnualSeries):
            _check_rate(float(self.participation))
        if not isinstance(self.unemployment_model, LaggedLinearModel) or \
                self.unemployment_model.target is not Target.UNEMPLOYMENT:
            raise SpecificationError(
                "Unemployment model must be a lagged linear model of unemployment",
                error_code="BAD_MODEL_SPEC"
            )
        for model in (self.inflation_model, *self.alternative_inflation_models):
            if isinstance(model, LaggedLinearModel) and model.target is Target.INFLATION:
                continue
            if isinstance(model, GeneralizedModel):
                continue
            raise SpecificationError(
                f"Model '{model.name}' does not forecast inflation from labor force",
                error_code="BAD_MODEL_SPEC"
            )
        if self.anchor is not None and not self.anchor.unit.is_level:
            raise SpecificationError("Anchor must hold labor force levels", error_code="BAD_MODEL_SPEC")
        object.__setattr__(self, "alternative_inflation_models", tuple(self.alternative_inflation_models))

    @property
    def headroom(self) -> int:
        """Years of change rate needed before the horizon start."""
        models = (self.unemployment_model, self.inflation_model, *self.alternative_inflation_models)
        return max(_model_lag(m) for m in models)


@dataclass(frozen=True)
class ForecastBundle:
    labor_force: AnnualSeries
    inflation: AnnualSeries
    unemployment: AnnualSeries
    scenario: ProjectionScenario
    notes: Tuple[str, ...] = ()
    alternatives: Tuple[Tuple[str, AnnualSeries], ...] = field(default_factory=tuple)

    @property
    def horizon(self) -> Tuple[int, int]:
        return self.labor_force.span

    def alternative(self, name: str) -> AnnualSeries:
        for label, series in self.alternatives:
            if label == name:
                return series
        raise KeyError(name)


def project_labor_force(population: AnnualSeries, participation_rate: Union[float, AnnualSeries],
                        horizon: Tuple[int, int]) -> AnnualSeries:
    """LF(t) = participation(t) * population(t) over the horizon."""
    pop = window(population, *horizon)
    levels = pop.array
    bad = np.flatnonzero(levels <= 0)
    if bad.size:
        year = pop.start_year + int(bad[0])
        raise DomainError(
            f"Non-positive population {levels[bad[0]]} in {year}",
            error_code="NON_POSITIVE_LEVEL",
            details={"year": year}
        )

    if isinstance(participation_rate, AnnualSeries):
        rates = window(participation_rate, *horizon)
        for year, value in rates.items():
            _check_rate(value, year)
    else:
        _check_rate(float(participation_rate))
        rates = float(participation_rate)

    return scale(pop, rates, unit=Unit.PERSONS, label="labor force")


def _spliced_labor_force(scenario: ProjectionScenario, first: int, last: int) -> AnnualSeries:
    """Observed levels up to the anchor's last year, projection afterwards."""
    levels = {}
    projected_from = first
    anchor = scenario.anchor
    if anchor is not None and anchor.end_year >= first:
        levels.update(window(anchor, first, min(anchor.end_year, last)).to_dict())
        projected_from = anchor.end_year + 1
    if projected_from <= last:
        levels.update(
            project_labor_force(scenario.population, scenario.participation, (projected_from, last)).to_dict()
        )
    return AnnualSeries.from_mapping(levels, Unit.PERSONS, "labor force")


def _inflation_path(model: InflationModel, rate: AnnualSeries, unemployment: AnnualSeries,
                    horizon: Tuple[int, int]) -> AnnualSeries:
    if isinstance(model, GeneralizedModel):
        predicted = model.predict(rate, unemployment)
    else:
        predicted = model.predict(rate)
    return window(predicted, *horizon).relabel(f"inflation[{model.name}]")


def forecast(scenario: ProjectionScenario) -> ForecastBundle:
    """Deterministic forecast of labor force, unemployment and inflation."""
    first, last = scenario.horizon
    events = PipelineLogger("projection")
    notes: List[str] = []

    spliced = _spliced_labor_force(scenario, first - scenario.headroom - 1, last)
    rate = change_rate(spliced)
    if scenario.anchor is not None and scenario.anchor.end_year >= first - 1:
        notes.append(f"labor force spliced to observed levels through {min(scenario.anchor.end_year, last)}")

    # Unemployment first: the generalized inflation model consumes it
    unemployment = window(scenario.unemployment_model.predict(rate), first, last)
    values = unemployment.array
    clipped = np.clip(values, 0.0, 1.0)
    if not np.array_equal(clipped, values):
        years = [year for year, v in unemployment.items() if not 0.0 <= v <= 1.0]
        message = f"unemployment clamped to [0, 1] in {', '.join(map(str, years))}"
        logger.warning(message)
        notes.append(message)
        unemployment = AnnualSeries.from_array(first, clipped, Unit.RATE, unemployment.label)
    unemployment = unemployment.relabel("unemployment")

    inflation = _inflation_path(scenario.inflation_model, rate, unemployment, scenario.horizon).relabel("inflation")
    alternatives = tuple(
        (model.name, _inflation_path(model, rate, unemployment, scenario.horizon))
        for model in scenario.alternative_inflation_models
    )

    events.log_projection(scenario.name, first, last, len(notes))
    return ForecastBundle(
        labor_force=window(spliced, first, last),
        inflation=inflation,
        unemployment=unemployment,
        scenario=scenario,
        notes=tuple(notes),
        alternatives=alternatives,
    )


def sweep(scenario: ProjectionScenario, participation_rates: Iterable[float]) -> List[ForecastBundle]:
    """One forecast per constant participation rate."""
    return [
        forecast(replace(scenario, participation=float(rate), name=f"{scenario.name}@{rate:g}"))
        for rate in participation_rates
    ]


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

def parse_scenario(text: str) -> ScenarioConfig:
    values = dotenv_values(stream=io.StringIO(text), interpolate=False)
    try:
        return validate_scenario(values)
    except SchemaValidationError as e:
        raise ConfigurationError(
            f"Invalid scenario: {e.errors()[0]['msg']}",
            error_code="INVALID_SCENARIO",
            details={"errors": [err["msg"] for err in e.errors()]}
        )


def resolve_model(reference: str, base_dir: Path, presets: PresetManager | None = None) -> Model:
    """'preset:NAME' or a model file path relative to base_dir."""
    if reference.startswith("preset:"):
        return (presets or PresetManager()).get_preset(reference[len("preset:"):])
    path = Path(reference)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigurationError(f"Model file not found: {path}", error_code="INVALID_SCENARIO")
    return load_model(path.read_text(encoding="utf-8"))


def build_scenario(config: ScenarioConfig, registry: DatasetRegistry, base_dir: Path,
                   default_horizon: Tuple[int, int] = DEFAULT_HORIZON,
                   default_participation: float = DEFAULT_PARTICIPATION_RATE,
                   presets: PresetManager | None = None) -> ProjectionScenario:
    """Resolve dataset keys and model references of a scenario file."""
    presets = presets or PresetManager()
    if config.participation is not None:
        participation: Union[float, AnnualSeries] = registry.get(DatasetKey.parse(config.participation))
    elif config.participation_rate is not None:
        participation = config.participation_rate
    else:
        participation = default_participation

    return ProjectionScenario(
        population=registry.get(DatasetKey.parse(config.population)),
        participation=participation,
        horizon=config.horizon or default_horizon,
        anchor=registry.get(DatasetKey.parse(config.anchor)) if config.anchor else None,
        inflation_model=resolve_model(config.inflation_model, base_dir, presets),
        unemployment_model=resolve_model(config.unemployment_model, base_dir, presets),
        alternative_inflation_models=tuple(
            resolve_model(ref, base_dir, presets) for ref in config.alternative_inflation_models
        ),
        name=config.name,
    )


def bundle_series(bundle: ForecastBundle) -> Mapping[str, AnnualSeries]:
    """Columns of a bundle in output order."""
    columns = {
        "labor_force": bundle.labor_force,
        "inflation": bundle.inflation,
        "unemployment": bundle.unemployment,
    }
    for name, series in bundle.alternatives:
        columns[f"inflation[{name}]"] = series
    return columns
