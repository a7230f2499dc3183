"""
Data writers and text reports for the command-line surface.

Data files carry full round-trip precision; reports print 6 significant
digits.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, TextIO

import pandas as pd
from pydantic import ValidationError as SchemaValidationError

from core.ingestion import DivergenceReport, Finding, format_value, save_csv
from core.models import (
    Evaluation,
    GeneralizedModel,
    LaggedLinearModel,
    Model,
    PhillipsModel,
    dump_model,
    model_record,
)
from core.projection import ForecastBundle, bundle_series
from core.regression import LinearFitResult
from core.series import AnnualSeries, Unit
from models.schemas import FindingRecord, SeriesDocument
from utils.exceptions import ParseError


def num(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.6g}"


# ---------------------------------------------------------------------------
# Series data
# ---------------------------------------------------------------------------

def series_document(series: AnnualSeries, label: str | None = None) -> dict:
    return SeriesDocument(
        label=label if label is not None else series.label,
        unit=series.unit.value,
        start_year=series.start_year,
        values=list(series.values),
    ).model_dump()


def write_json(columns: Mapping[str, AnnualSeries], stream: TextIO) -> None:
    documents = [series_document(series, name) for name, series in columns.items()]
    stream.write(json.dumps(documents, indent=2))
    stream.write("\n")


def bundle_frame(columns: Mapping[str, AnnualSeries]) -> pd.DataFrame:
    """Year-indexed frame of text cells; years outside a series' span stay empty."""
    first = min(s.start_year for s in columns.values())
    last = max(s.end_year for s in columns.values())
    frame = pd.DataFrame(
        {name: pd.Series({year: format_value(v) for year, v in s.items()}, dtype=object)
         for name, s in columns.items()},
        index=pd.RangeIndex(first, last + 1, name="year"),
    )
    return frame.fillna("")


def write_table(columns: Mapping[str, AnnualSeries], stream: TextIO) -> None:
    """Multi-column CSV keyed by year; cells outside a series' span stay empty."""
    bundle_frame(columns).to_csv(stream, lineterminator="\n")


def write_series(series: AnnualSeries, stream: TextIO, output_format: str) -> None:
    if output_format == "json":
        write_json({series.label: series}, stream)
    else:
        save_csv(series, stream)


def write_bundle(bundle: ForecastBundle, stream: TextIO, output_format: str) -> None:
    columns = bundle_series(bundle)
    if output_format == "json":
        write_json(columns, stream)
    else:
        write_table(columns, stream)


def read_bundle(path: Path) -> Mapping[str, AnnualSeries]:
    """Read a bundle written by write_bundle in either format."""
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            documents = [SeriesDocument(**item) for item in json.loads(text)]
        except (ValueError, TypeError, SchemaValidationError) as e:
            raise ParseError(f"Invalid bundle file {path}: {e}", error_code="MALFORMED_LINE")
        return {
            doc.label: AnnualSeries.from_array(doc.start_year, doc.values, Unit(doc.unit), doc.label)
            for doc in documents
        }

    try:
        frame = pd.read_csv(io.StringIO(text), index_col="year", float_precision="round_trip")
    except (ValueError, pd.errors.ParserError) as e:
        raise ParseError(f"Invalid bundle file {path}: {e}", error_code="MALFORMED_LINE")
    if not pd.api.types.is_integer_dtype(frame.index) or frame.index.has_duplicates:
        raise ParseError(f"Bundle file {path} needs one integer year per row", error_code="MALFORMED_LINE")
    for name in frame.columns:
        if not pd.api.types.is_numeric_dtype(frame[name]):
            raise ParseError(f"Bundle column '{name}' in {path} is not numeric", error_code="MALFORMED_LINE")

    units = {"labor_force": Unit.PERSONS}
    return {
        name: AnnualSeries.from_mapping(
            {int(year): float(value) for year, value in frame[name].dropna().items()},
            units.get(name, Unit.RATE), name
        )
        for name in frame.columns
    }


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

def write_model(model: Model, stream: TextIO, output_format: str) -> None:
    if output_format == "json":
        stream.write(json.dumps(model_record(model).model_dump(exclude_none=True), indent=2))
        stream.write("\n")
    else:
        stream.write(dump_model(model))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _fit_lines(fit: LinearFitResult) -> List[str]:
    return [
        f"  slope           {num(fit.slope)}  (stderr {num(fit.slope_stderr)})",
        f"  intercept       {num(fit.intercept)}  (stderr {num(fit.intercept_stderr)})",
        f"  r_squared       {num(fit.r_squared)}",
        f"  residual_stdev  {num(fit.residual_stdev)}",
        f"  n               {fit.n}",
        f"  period          {fit.period[0]}-{fit.period[1]}",
    ]


def fit_report(model: Model, evaluation: Evaluation | None = None,
               regimes: tuple | None = None, split_year: int | None = None) -> str:
    lines = [f"model {model.name} ({model.family})"]
    if model.note:
        lines.append(f"note: {model.note}")

    if isinstance(model, PhillipsModel):
        lines.append(f"UE(t) = {num(model.intercept)} + {num(model.slope)} * pi(t - {model.lag})")
    elif isinstance(model, LaggedLinearModel):
        lines.append(
            f"{model.target.value}(t) = {num(model.A)} + {num(model.B)} * r(t - {model.t0})"
            f"  [fitted by {model.fitted_by.value}]"
        )
    elif isinstance(model, GeneralizedModel):
        lines.append(f"pi(t) = {num(model.D1)} * r(t) + {num(model.D2)} * UE(t) + {num(model.D3)}")

    calibration = getattr(model, "calibration", None)
    if calibration is not None:
        lines.append("cumulative calibration:")
        for name, value in calibration.coefficients.items():
            lines.append(f"  {name:<15} {num(value)}")
        lines.append(f"  lag             {calibration.lag}")
        lines.append(f"  cumulative_rms  {num(calibration.objective)}")
        lines.append(f"  annual_rms      {num(calibration.annual_rms)}")
        lines.append(f"  evaluations     {calibration.evaluations}")

    fit = getattr(model, "fit", None)
    if fit is not None:
        lines.append("ols:")
        lines.extend(_fit_lines(fit))

    scan = getattr(model, "scan", ())
    if scan:
        lines.append("lag scan:")
        lines.append("  lag  r_squared  n")
        for entry in scan:
            lines.append(f"  {entry.lag:>3}  {num(entry.r_squared):<9}  {entry.n}")

    if evaluation is not None and evaluation.residuals is not None:
        lines.append("residuals versus observed:")
        lines.append(f"  span            {evaluation.residuals.start_year}-{evaluation.residuals.end_year}")
        lines.append(f"  stdev           {num(evaluation.residual_stdev)}")
        lines.append(f"  max_abs         {num(evaluation.residual_max_abs)}")
    if regimes is not None:
        before, after = regimes
        lines.append(f"  stdev before {split_year}  {num(before)}")
        lines.append(f"  stdev from {split_year}    {num(after)}")
    return "\n".join(lines) + "\n"


def findings_report(findings: Iterable[Finding]) -> str:
    lines = []
    for finding in findings:
        record = FindingRecord(severity=finding.severity.value, year=finding.year, message=finding.message)
        year = record.year if record.year is not None else "-"
        lines.append(f"{record.severity}: {year}: {record.message}")
    return "\n".join(lines) + ("\n" if lines else "")


def divergence_report(report: DivergenceReport) -> str:
    first, last = report.common_window
    return "\n".join([
        f"compare {report.key_a} vs {report.key_b} ({report.transform})",
        f"  window          {first}-{last}",
        f"  max_abs_diff    {num(report.max_abs_diff)} in {report.max_abs_diff_year}",
        f"  mean_abs_diff   {num(report.mean_abs_diff)}",
        f"  correlation     {num(report.correlation)}",
    ]) + "\n"


def projection_report(bundle: ForecastBundle) -> str:
    first, last = bundle.horizon
    lines = [f"scenario {bundle.scenario.name}: {first}-{last}"]
    for year in (first, last):
        lines.append(
            f"  {year}  labor_force {num(bundle.labor_force.value_at(year))}"
            f"  inflation {num(bundle.inflation.value_at(year))}"
            f"  unemployment {num(bundle.unemployment.value_at(year))}"
        )
    lines.extend(f"note: {note}" for note in bundle.notes)
    return "\n".join(lines) + "\n"
