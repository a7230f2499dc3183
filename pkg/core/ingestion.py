"""
Loading, validation, persistence and reconciliation of annual series.

Storage is one CSV file per dataset plus a plain-text manifest
(`variable,source,relative_path` per line) inside the registry directory.
"""
from __future__ import annotations

import io
import logging
import math
import os
import re
import tempfile
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd

from core.series import AnnualSeries, Unit, align, change_rate, contiguous_years
from utils.exceptions import (
    ConflictError,
    DatasetNotFoundError,
    DuplicateYearError,
    ParseError,
    ValidationError,
)
from utils.logger import PipelineLogger

logger = logging.getLogger("lfmkit.ingestion")

MANIFEST_NAME = "manifest.txt"

# Plausibility screening defaults
RATE_BAND = 0.25
JUMP_THRESHOLD = 0.10


class Variable(str, Enum):
    LABOR_FORCE = "labor_force"
    CPI_INFLATION = "cpi_inflation"
    GDP_DEFLATOR = "gdp_deflator"
    UNEMPLOYMENT = "unemployment"
    POPULATION = "population"

    @property
    def default_unit(self) -> Unit:
        if self in (Variable.LABOR_FORCE, Variable.POPULATION):
            return Unit.PERSONS
        return Unit.RATE


class Source(str, Enum):
    OECD = "oecd"
    EUROSTAT = "eurostat"
    NAC = "nac"
    US_DEF = "us_def"
    IPSS = "ipss"
    USER = "user"


@dataclass(frozen=True, order=True)
class DatasetKey:
    variable: Variable
    source: Source

    @classmethod
    def parse(cls, text: str) -> "DatasetKey":
        """Parse 'variable:source'."""
        variable, sep, source = text.strip().partition(":")
        try:
            if not sep:
                raise ValueError(text)
            return cls(Variable(variable), Source(source))
        except ValueError:
            raise ParseError(
                f"Invalid dataset key '{text}'; expected variable:source with variable in "
                f"{[v.value for v in Variable]} and source in {[s.value for s in Source]}",
                error_code="MALFORMED_KEY",
                details={"key": text}
            )

    def __str__(self) -> str:
        return f"{self.variable.value}:{self.source.value}"

    @property
    def filename(self) -> str:
        return f"{self.variable.value}__{self.source.value}.csv"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    year: Optional[int]
    message: str


@dataclass(frozen=True)
class DivergenceReport:
    key_a: DatasetKey
    key_b: DatasetKey
    max_abs_diff: float
    max_abs_diff_year: int
    mean_abs_diff: float
    correlation: float
    common_window: Tuple[int, int]
    transform: str = "levels"


# ---------------------------------------------------------------------------
# CSV codec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CsvRecords:
    """Raw parse result before series construction."""
    values: Dict[int, float]
    metadata: Dict[str, str]


YEAR_PATTERN = r"\d{4}"
# Plain decimal notation; "nan" passes so screening can report the year
DECIMAL_PATTERN = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|nan"
_PANDAS_LINE = re.compile(r"line (\d+)")


def read_text(path: str | Path) -> str:
    """Read a UTF-8 file; undecodable bytes become a ParseError naming the line."""
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line_number = data[:e.start].count(b"\n") + 1
        raise ParseError(
            f"Line {line_number}: invalid UTF-8 in {path}",
            error_code="MALFORMED_LINE",
            details={"line": line_number, "path": str(path)}
        )


def read_csv_records(stream: TextIO) -> CsvRecords:
    """Parse `year,value` text; `#` lines are comments, `# key: value` is metadata."""
    try:
        text = stream.read()
    except UnicodeDecodeError as e:
        raise ParseError(f"Input is not valid UTF-8: {e.reason}", error_code="MALFORMED_LINE",
                         details={"line": None})

    metadata: Dict[str, str] = {}
    content: List[str] = []
    line_numbers: List[int] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep and key.strip() in ("unit", "label"):
                metadata[key.strip()] = value.strip()
        elif line:
            content.append(line)
            line_numbers.append(line_number)

    if not content:
        raise ParseError("Missing header 'year,value'", error_code="MALFORMED_LINE", details={"line": 0})

    try:
        frame = pd.read_csv(io.StringIO("\n".join(content)), header=None, dtype=str, comment="#",
                            na_filter=False, skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        found = _PANDAS_LINE.search(str(e))
        row = int(found.group(1)) if found else 0
        line_number = line_numbers[row - 1] if 0 < row <= len(line_numbers) else None
        raise ParseError(
            f"Line {line_number}: expected 'YYYY,value'",
            error_code="MALFORMED_LINE",
            details={"line": line_number}
        )
    frame = frame.fillna("").apply(lambda column: column.str.strip())
    frame.index = line_numbers

    header = [cell.lower() for cell in frame.iloc[0]]
    if header != ["year", "value"]:
        raise ParseError(
            f"Line {line_numbers[0]}: expected header 'year,value', got '{content[0]}'",
            error_code="MALFORMED_LINE",
            details={"line": line_numbers[0]}
        )
    rows = frame.iloc[1:].set_axis(["year", "value"], axis=1)

    bad_year = ~rows["year"].str.fullmatch(YEAR_PATTERN)
    if bad_year.any():
        line_number = int(bad_year.idxmax())
        raise ParseError(
            f"Line {line_number}: expected 'YYYY,value', got '{content[line_numbers.index(line_number)]}'",
            error_code="MALFORMED_LINE",
            details={"line": line_number}
        )
    bad_value = ~rows["value"].str.fullmatch(DECIMAL_PATTERN, case=False)
    if bad_value.any():
        line_number = int(bad_value.idxmax())
        raise ParseError(
            f"Line {line_number}: value '{rows.at[line_number, 'value']}' is not a decimal number",
            error_code="MALFORMED_LINE",
            details={"line": line_number}
        )

    years = rows["year"].astype(int)
    duplicated = years.duplicated()
    if duplicated.any():
        line_number = int(duplicated.idxmax())
        year = int(years.loc[line_number])
        raise DuplicateYearError(
            f"Line {line_number}: duplicate year {year}",
            error_code="DUPLICATE_YEAR",
            details={"line": line_number, "year": year}
        )

    values = {int(year): float(value) for year, value in zip(years, rows["value"])}
    return CsvRecords(values, metadata)


def load_csv(stream: TextIO, unit: Unit | str | None = None, label: str | None = None) -> AnnualSeries:
    """Parse a CSV stream into a series; explicit unit/label override file metadata."""
    records = read_csv_records(stream)
    unit = Unit(unit) if unit is not None else Unit(records.metadata.get("unit", Unit.RATE.value))
    label = label if label is not None else records.metadata.get("label", "")
    return AnnualSeries.from_mapping(records.values, unit, label)


def screen_csv(stream: TextIO, key: DatasetKey, unit: Unit | str | None = None,
               label: str | None = None, rate_band: float = RATE_BAND,
               jump_threshold: float = JUMP_THRESHOLD) -> Tuple[Optional[AnnualSeries], List[Finding]]:
    """Parse and screen an input file.

    The series is None when an error-severity finding occurred.
    """
    records = read_csv_records(stream)
    if unit is not None:
        unit = Unit(unit)
    else:
        unit = Unit(records.metadata.get("unit", key.variable.default_unit.value))
    label = label if label is not None else records.metadata.get("label", str(key))

    years = contiguous_years(records.values, label)
    findings = validate_values(years[0], [records.values[y] for y in years], unit, rate_band, jump_threshold)
    if has_errors(findings):
        return None, findings
    return AnnualSeries.from_mapping(records.values, unit, label), findings


def format_value(value: float) -> str:
    """Shortest text that reads back to the identical float."""
    return repr(float(value))


def save_csv(series: AnnualSeries, stream: TextIO) -> None:
    stream.write(f"# unit: {series.unit.value}\n")
    if series.label:
        stream.write(f"# label: {series.label}\n")
    frame = pd.DataFrame({"year": list(series.years), "value": [format_value(v) for v in series.values]})
    frame.to_csv(stream, index=False, lineterminator="\n")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_values(start_year: int, values: List[float], unit: Unit,
                    rate_band: float = RATE_BAND, jump_threshold: float = JUMP_THRESHOLD) -> List[Finding]:
    """Plausibility screening on raw values (non-finite values allowed here)."""
    findings: List[Finding] = []
    previous: Optional[float] = None

    for offset, value in enumerate(values):
        year = start_year + offset
        if not math.isfinite(value):
            findings.append(Finding(Severity.ERROR, year, f"non-finite value {value}"))
            previous = None
            continue
        if unit is Unit.RATE:
            if abs(value) > rate_band:
                findings.append(Finding(
                    Severity.WARNING, year,
                    f"rate {value} outside plausibility band [-{rate_band}, {rate_band}]"
                ))
            if previous is not None and abs(value - previous) > jump_threshold:
                findings.append(Finding(
                    Severity.WARNING, year,
                    f"jump of {value - previous:+.6g} from previous year exceeds {jump_threshold} (possible series break)"
                ))
        elif value <= 0:
            findings.append(Finding(Severity.WARNING, year, f"non-positive level {value}"))
        previous = value

    return findings


def validate(s: AnnualSeries, rate_band: float = RATE_BAND,
             jump_threshold: float = JUMP_THRESHOLD) -> List[Finding]:
    return validate_values(s.start_year, list(s.values), s.unit, rate_band, jump_threshold)


def has_errors(findings: List[Finding]) -> bool:
    return any(f.severity is Severity.ERROR for f in findings)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

class DatasetRegistry:
    """File-backed store of validated series keyed by (variable, source)."""

    def __init__(self, root: str | Path, rate_band: float = RATE_BAND,
                 jump_threshold: float = JUMP_THRESHOLD):
        self.root = Path(root)
        self.rate_band = rate_band
        self.jump_threshold = jump_threshold
        self.manifest_path = self.root / MANIFEST_NAME
        self.entries: Dict[DatasetKey, AnnualSeries] = {}
        self._paths: Dict[DatasetKey, str] = {}
        self._lock = threading.Lock()
        self.events = PipelineLogger("registry")
        self._load()

    def _load(self) -> None:
        if not self.manifest_path.exists():
            return
        with open(self.manifest_path, "r", encoding="utf-8") as f:
            for line_number, raw in enumerate(f, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = [p.strip() for p in line.split(",")]
                if len(parts) != 3:
                    raise ParseError(
                        f"Manifest line {line_number}: expected 'variable,source,relative_path'",
                        error_code="MALFORMED_LINE",
                        details={"line": line_number, "path": str(self.manifest_path)}
                    )
                key = DatasetKey.parse(f"{parts[0]}:{parts[1]}")
                self.entries[key] = load_csv(io.StringIO(read_text(self.root / parts[2])))
                self._paths[key] = parts[2]
        logger.debug(f"Loaded {len(self.entries)} datasets from {self.manifest_path}")

    def __contains__(self, key: DatasetKey) -> bool:
        return key in self.entries

    def keys(self) -> List[DatasetKey]:
        return sorted(self.entries)

    def get(self, key: DatasetKey) -> AnnualSeries:
        try:
            return self.entries[key]
        except KeyError:
            raise DatasetNotFoundError(
                f"Dataset {key} not registered in {self.root}",
                error_code="UNKNOWN_DATASET",
                details={"key": str(key), "available": [str(k) for k in self.keys()]}
            )

    def register(self, key: DatasetKey, series: AnnualSeries, overwrite: bool = False) -> List[Finding]:
        """Validate and persist; returns the (non-error) findings."""
        findings = validate(series, self.rate_band, self.jump_threshold)
        for finding in findings:
            self.events.log_finding(finding.severity.value, finding.year, f"{key}: {finding.message}")
        if has_errors(findings):
            self.events.log_registry_operation("register", str(key), False)
            raise ValidationError(
                f"Dataset {key} has error-severity findings",
                error_code="VALIDATION_FAILED",
                details={"findings": [f.message for f in findings if f.severity is Severity.ERROR]}
            )

        with self._lock:
            if key in self.entries and not overwrite:
                self.events.log_registry_operation("register", str(key), False)
                raise ConflictError(
                    f"Dataset {key} already registered; pass overwrite to replace it",
                    error_code="DATASET_EXISTS",
                    details={"key": str(key)}
                )
            self.root.mkdir(parents=True, exist_ok=True)
            relative = key.filename
            self._write_atomic(self.root / relative, lambda f: save_csv(series, f))
            self.entries[key] = series
            self._paths[key] = relative
            self._write_atomic(self.manifest_path, self._write_manifest)

        self.events.log_registry_operation("register", str(key), True)
        return findings

    def _write_manifest(self, f: TextIO) -> None:
        f.write("# variable,source,relative_path\n")
        for key in self.keys():
            f.write(f"{key.variable.value},{key.source.value},{self._paths[key]}\n")

    def _write_atomic(self, path: Path, writer) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=path.suffix)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                writer(f)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


# ---------------------------------------------------------------------------
# Source comparison
# ---------------------------------------------------------------------------

def compare_sources(reg: DatasetRegistry, a: DatasetKey, b: DatasetKey,
                    transform: str = "levels") -> DivergenceReport:
    """Difference statistics of two registered series over their common window."""
    series_a, series_b = reg.get(a), reg.get(b)
    if transform == "change_rate":
        series_a, series_b = change_rate(series_a), change_rate(series_b)
    elif transform != "levels":
        raise ParseError(f"Unknown transform '{transform}'", error_code="BAD_TRANSFORM")

    pair = align(series_a, series_b)
    x, y = pair.x.array, pair.y.array
    diffs = np.abs(x - y)
    worst = int(np.argmax(diffs))

    sx, sy = float(np.std(x)), float(np.std(y))
    if sx == 0.0 or sy == 0.0:
        # Correlation undefined; constant offsets still count as perfectly related
        correlation = 1.0 if sx == sy == 0.0 else 0.0
    else:
        correlation = float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))

    return DivergenceReport(
        key_a=a,
        key_b=b,
        max_abs_diff=float(diffs[worst]),
        max_abs_diff_year=pair.common_window[0] + worst,
        mean_abs_diff=float(np.mean(diffs)),
        correlation=correlation,
        common_window=pair.common_window,
        transform=transform,
    )
