"""
Annual time-series value type and its algebra.

An AnnualSeries is an immutable, contiguous, year-indexed run of finite
values. All rates are dimensionless fractions (0.04 means 4% per year).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple, Union

import numpy as np

from utils.exceptions import (
    AlignmentError,
    ContiguityError,
    DomainError,
    InsufficientDataError,
    range_error,
)


class Unit(str, Enum):
    """Units carried by a series."""

    RATE = "fraction-per-year-rate"
    PERSONS = "persons"
    INDEX = "index-level"

    @property
    def is_level(self) -> bool:
        return self is not Unit.RATE


def contiguous_years(years: Iterable[int], label: str = "") -> List[int]:
    """Sorted years; raises when empty or when a year is missing in between."""
    years = sorted(years)
    if not years:
        raise InsufficientDataError("No records", error_code="INSUFFICIENT_DATA")
    missing = sorted(set(range(years[0], years[-1] + 1)) - set(years))
    if missing:
        raise ContiguityError(
            f"Years not contiguous in {label or 'series'}; missing: {', '.join(map(str, missing))}",
            error_code="MISSING_YEARS",
            details={"missing_years": missing}
        )
    return years


@dataclass(frozen=True)
class AnnualSeries:
    """Contiguous year-indexed sequence: values[i] belongs to start_year + i."""

    start_year: int
    values: Tuple[float, ...]
    unit: Unit = Unit.RATE
    label: str = ""

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise InsufficientDataError(
                "Series must hold at least one value",
                error_code="INSUFFICIENT_DATA",
                details={"label": self.label}
            )
        for i, v in enumerate(values):
            if not math.isfinite(v):
                raise DomainError(
                    f"Non-finite value in {self.label or 'series'} at year {self.start_year + i}",
                    error_code="NON_FINITE_VALUE",
                    details={"year": self.start_year + i}
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_year", int(self.start_year))
        object.__setattr__(self, "unit", Unit(self.unit))

    @classmethod
    def from_array(cls, start_year: int, values: Union[np.ndarray, Sequence[float]],
                   unit: Unit = Unit.RATE, label: str = "") -> "AnnualSeries":
        return cls(start_year, tuple(np.asarray(values, dtype=float).tolist()), unit, label)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float], unit: Unit = Unit.RATE,
                     label: str = "") -> "AnnualSeries":
        """Build from year -> value pairs in any order; gaps are rejected."""
        years = contiguous_years(mapping, label)
        return cls(years[0], tuple(mapping[y] for y in years), unit, label)

    @property
    def end_year(self) -> int:
        return self.start_year + len(self.values) - 1

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start_year, self.end_year)

    @property
    def years(self) -> range:
        return range(self.start_year, self.end_year + 1)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def covers(self, first: int, last: int) -> bool:
        return self.start_year <= first and last <= self.end_year

    def value_at(self, year: int) -> float:
        if not self.covers(year, year):
            raise range_error(year, year, self.span, self.label or "series")
        return self.values[year - self.start_year]

    def items(self) -> Iterator[Tuple[int, float]]:
        return zip(self.years, self.values)

    def to_dict(self) -> Dict[int, float]:
        return dict(self.items())

    def relabel(self, label: str) -> "AnnualSeries":
        return replace(self, label=label)


@dataclass(frozen=True)
class SeriesPair:
    """Two series restricted to their common window."""

    x: AnnualSeries
    y: AnnualSeries
    common_window: Tuple[int, int]

    def __len__(self) -> int:
        return len(self.x)


def change_rate(s: AnnualSeries) -> AnnualSeries:
    """Backward relative change (s[t] - s[t-1]) / s[t-1], aligned to year t."""
    if len(s) < 2:
        raise InsufficientDataError(
            f"Change rate needs at least 2 values, {s.label or 'series'} has {len(s)}",
            error_code="INSUFFICIENT_DATA"
        )
    levels = s.array
    bad = np.flatnonzero(levels <= 0)
    if bad.size:
        year = s.start_year + int(bad[0])
        raise DomainError(
            f"Non-positive level {levels[bad[0]]} in {s.label or 'series'} at year {year}",
            error_code="NON_POSITIVE_LEVEL",
            details={"year": year}
        )
    rates = (levels[1:] - levels[:-1]) / levels[:-1]
    return AnnualSeries.from_array(s.start_year + 1, rates, Unit.RATE, f"d({s.label})/{s.label}" if s.label else "")


def lag_shift(s: AnnualSeries, k: int) -> AnnualSeries:
    """Relabel years so the value measured in year y lines up with year y + k."""
    if k < 0:
        raise DomainError(f"Lag must be >= 0, got {k}", error_code="NEGATIVE_LAG", details={"lag": k})
    if k == 0:
        return s
    return replace(s, start_year=s.start_year + k)


def window(s: AnnualSeries, first: int, last: int) -> AnnualSeries:
    """Restrict to [first, last]."""
    if first > last or not s.covers(first, last):
        raise range_error(first, last, s.span, s.label or "series")
    if (first, last) == s.span:
        return s
    lo = first - s.start_year
    return replace(s, start_year=first, values=s.values[lo:lo + last - first + 1])


def align(x: AnnualSeries, y: AnnualSeries) -> SeriesPair:
    """Window both series to the intersection of their year ranges."""
    first = max(x.start_year, y.start_year)
    last = min(x.end_year, y.end_year)
    if first > last:
        raise AlignmentError(
            f"No common years between {x.span} and {y.span}",
            error_code="EMPTY_INTERSECTION",
            details={"x_span": list(x.span), "y_span": list(y.span)}
        )
    return SeriesPair(window(x, first, last), window(y, first, last), (first, last))


def cumulative(s: AnnualSeries, from_year: int) -> AnnualSeries:
    """Running sum starting at from_year."""
    if not s.covers(from_year, from_year):
        raise range_error(from_year, from_year, s.span, s.label or "series")
    tail = window(s, from_year, s.end_year)
    return replace(tail, values=tuple(np.cumsum(tail.array).tolist()),
                   label=f"cum({s.label})" if s.label else "")


def diff(s: AnnualSeries) -> AnnualSeries:
    """First difference s[t] - s[t-1], aligned to year t."""
    if len(s) < 2:
        raise InsufficientDataError("Difference needs at least 2 values", error_code="INSUFFICIENT_DATA")
    return replace(s, start_year=s.start_year + 1, values=tuple(np.diff(s.array).tolist()))


def scale(s: AnnualSeries, factor: Union[float, AnnualSeries], unit: Unit | None = None,
          label: str | None = None) -> AnnualSeries:
    """Pointwise product with a scalar, or with a series covering s's years."""
    if isinstance(factor, AnnualSeries):
        factors = window(factor, s.start_year, s.end_year).array
    else:
        factors = float(factor)
    return AnnualSeries.from_array(
        s.start_year, s.array * factors,
        unit if unit is not None else s.unit,
        label if label is not None else s.label
    )
