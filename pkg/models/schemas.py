"""
Pydantic schemas for validation of run configuration, scenario files,
serialized models and JSON series documents.
"""
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import parse_year_pair


def _year_pair(v):
    if v is None or isinstance(v, tuple):
        return v
    if isinstance(v, list):
        return tuple(v)
    return parse_year_pair(str(v))


class RunConfig(BaseModel):
    """Validated per-command parameters."""

    model_config = ConfigDict(frozen=True)

    registry: Path = Field(..., description="Registry directory")
    window: Optional[Tuple[int, int]] = Field(default=None, description="Fit window FIRST:LAST")
    max_lag: int = Field(default=6, ge=0, description="Largest lag tried")
    estimator: Optional[Literal["ols", "cumulative"]] = Field(default=None, description="Estimator")
    preset: Optional[str] = Field(default=None, description="Preset model name")
    output_format: Literal["csv", "json"] = Field(default="csv", description="Data output format")
    out: Optional[Path] = Field(default=None, description="Output path; stdout when absent")
    overwrite: bool = Field(default=False, description="Replace existing datasets")

    @field_validator("window", mode="before")
    @classmethod
    def window_is_year_pair(cls, v):
        return _year_pair(v)

    @field_validator("window")
    @classmethod
    def window_ordered(cls, v):
        if v is not None and v[0] > v[1]:
            raise ValueError(f"Window {v[0]}:{v[1]} is reversed")
        return v


class ModelRecord(BaseModel):
    """Key-value model file contents."""

    name: str = Field(..., min_length=1)
    family: Literal["phillips", "lagged_linear", "generalized"]
    target: Optional[Literal["inflation", "unemployment"]] = None
    slope: Optional[float] = None
    intercept: Optional[float] = None
    A: Optional[float] = None
    B: Optional[float] = None
    D1: Optional[float] = None
    D2: Optional[float] = None
    D3: Optional[float] = None
    lag: int = Field(default=0, ge=0)
    window: Optional[Tuple[int, int]] = None
    cumulative_start: Optional[int] = None
    fitted_by: Optional[Literal["ols", "cumulative", "preset"]] = None
    note: str = ""

    @field_validator("window", mode="before")
    @classmethod
    def window_is_year_pair(cls, v):
        return _year_pair(v or None)

    @field_validator("cumulative_start", mode="before")
    @classmethod
    def empty_is_none(cls, v):
        return v or None

    @model_validator(mode="after")
    def coefficients_match_family(self):
        required = {
            "phillips": ("slope", "intercept"),
            "lagged_linear": ("A", "B", "target"),
            "generalized": ("D1", "D2", "D3"),
        }[self.family]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.family} model file lacks {', '.join(missing)}")
        return self


class ScenarioConfig(BaseModel):
    """Projection scenario file contents (dataset keys and model references as text)."""

    name: str = Field(default="scenario", min_length=1)
    population: str = Field(..., description="Dataset key of the population path")
    participation_rate: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    participation: Optional[str] = Field(default=None, description="Dataset key of a per-year participation path")
    horizon: Optional[Tuple[int, int]] = None
    anchor: Optional[str] = Field(default=None, description="Dataset key of observed labor force levels")
    inflation_model: str = Field(..., description="preset:NAME or model file path")
    unemployment_model: str = Field(..., description="preset:NAME or model file path")
    alternative_inflation_models: List[str] = Field(default_factory=list)

    @field_validator("horizon", mode="before")
    @classmethod
    def horizon_is_year_pair(cls, v):
        return _year_pair(v or None)

    @field_validator("participation", "anchor", mode="before")
    @classmethod
    def empty_is_none(cls, v):
        return v or None

    @field_validator("alternative_inflation_models", mode="before")
    @classmethod
    def split_list(cls, v):
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v or []

    @model_validator(mode="after")
    def one_participation_source(self):
        if self.participation_rate is not None and self.participation is not None:
            raise ValueError("Give participation_rate or participation, not both")
        return self


class SeriesDocument(BaseModel):
    """JSON form of one series."""

    label: str
    unit: str
    start_year: int
    values: List[float]


class FindingRecord(BaseModel):
    severity: Literal["error", "warning"]
    year: Optional[int] = None
    message: str


def validate_scenario(data: Dict[str, Optional[str]]) -> ScenarioConfig:
    """Validate and create ScenarioConfig from key-value pairs."""
    return ScenarioConfig(**{k: v for k, v in data.items() if v is not None})


def validate_model_record(data: Dict[str, Optional[str]]) -> ModelRecord:
    """Validate and create ModelRecord from key-value pairs."""
    return ModelRecord(**{k: v for k, v in data.items() if v is not None})
