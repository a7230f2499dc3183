#!/usr/bin/env python3
"""
Unit tests for the annual series type and its algebra.
"""
import math

import numpy as np
import pytest

from core.series import (
    AnnualSeries,
    Unit,
    align,
    change_rate,
    cumulative,
    diff,
    lag_shift,
    scale,
    window,
)
from utils.exceptions import (
    AlignmentError,
    ContiguityError,
    DomainError,
    InsufficientDataError,
    RangeError,
)


class TestAnnualSeries:
    """Construction and invariants."""

    def test_years_follow_start_year(self):
        """Test years follow start year."""
        s = AnnualSeries(2000, (1.0, 2.0, 3.0))

        assert s.end_year == 2002
        assert list(s.years) == [2000, 2001, 2002]
        assert s.value_at(2001) == 2.0

    def test_empty_series_rejected(self):
        """Test empty series rejected."""
        with pytest.raises(InsufficientDataError):
            AnnualSeries(2000, ())

    def test_non_finite_value_names_year(self):
        """Test non-finite value names year."""
        with pytest.raises(DomainError) as exc_info:
            AnnualSeries(1990, (0.01, math.nan, 0.02))

        assert exc_info.value.details["year"] == 1991

    def test_from_mapping_sorts_years(self):
        """Test from mapping sorts years."""
        s = AnnualSeries.from_mapping({2002: 3.0, 2000: 1.0, 2001: 2.0})

        assert s.start_year == 2000
        assert s.values == (1.0, 2.0, 3.0)

    def test_from_mapping_reports_missing_years(self):
        """Test from mapping reports missing years."""
        with pytest.raises(ContiguityError) as exc_info:
            AnnualSeries.from_mapping({2000: 1.0, 2001: 1.0, 2004: 1.0})

        assert exc_info.value.details["missing_years"] == [2002, 2003]
        assert "2002" in exc_info.value.message

    def test_value_outside_span_is_range_error(self):
        """Test value outside span is range error."""
        s = AnnualSeries(2000, (1.0,))

        with pytest.raises(RangeError) as exc_info:
            s.value_at(1999)

        assert exc_info.value.details["available"] == [2000, 2000]


class TestChangeRate:
    """Backward relative change."""

    def test_backward_difference_aligned_to_later_year(self):
        """Test backward difference aligned to later year."""
        s = AnnualSeries(2000, (100.0, 110.0, 99.0), Unit.PERSONS)

        r = change_rate(s)

        assert r.start_year == 2001
        assert r.unit is Unit.RATE
        assert r.values == pytest.approx((0.1, -0.1), abs=1e-15)

    def test_geometric_series_has_constant_rate(self):
        """Test geometric series has constant rate."""
        levels = 100.0 * 1.03 ** np.arange(40)
        r = change_rate(AnnualSeries.from_array(1960, levels, Unit.PERSONS))

        assert np.allclose(r.array, 0.03, rtol=0, atol=1e-14)

    def test_non_positive_level_names_year(self):
        """Test non-positive level names year."""
        s = AnnualSeries(2000, (5.0, 0.0, 4.0), Unit.PERSONS)

        with pytest.raises(DomainError) as exc_info:
            change_rate(s)

        assert exc_info.value.error_code == "NON_POSITIVE_LEVEL"
        assert exc_info.value.details["year"] == 2001

    def test_single_value_is_insufficient(self):
        """Test single value is insufficient."""
        with pytest.raises(InsufficientDataError):
            change_rate(AnnualSeries(2000, (5.0,), Unit.PERSONS))


class TestWindowAndAlign:

    def test_window_restricts(self):
        """Test window restricts."""
        s = AnnualSeries(2000, (0.0, 1.0, 2.0, 3.0))

        assert window(s, 2001, 2002).values == (1.0, 2.0)

    def test_window_outside_span(self):
        """Test window outside span."""
        s = AnnualSeries(2000, (0.0, 1.0))

        with pytest.raises(RangeError):
            window(s, 1999, 2001)

    def test_align_uses_intersection(self):
        """Test align uses intersection."""
        x = AnnualSeries(1990, tuple(range(10)))
        y = AnnualSeries(1995, tuple(range(10)))

        pair = align(x, y)

        assert pair.common_window == (1995, 1999)
        assert pair.x.values == (5.0, 6.0, 7.0, 8.0, 9.0)
        assert pair.y.values == (0.0, 1.0, 2.0, 3.0, 4.0)

    def test_disjoint_series_do_not_align(self):
        """Test disjoint series do not align."""
        with pytest.raises(AlignmentError):
            align(AnnualSeries(1990, (1.0,)), AnnualSeries(2000, (1.0,)))


class TestLagShift:

    def test_value_moves_forward(self):
        """Test value moves forward."""
        s = AnnualSeries(2000, (0.1, 0.2))

        shifted = lag_shift(s, 3)

        assert shifted.value_at(2003) == 0.1
        assert shifted.values == s.values

    def test_zero_lag_is_identity(self):
        """Test zero lag is identity."""
        s = AnnualSeries(2000, (0.1, 0.2))

        assert lag_shift(s, 0) is s

    def test_negative_lag_rejected(self):
        """Test negative lag rejected."""
        with pytest.raises(DomainError):
            lag_shift(AnnualSeries(2000, (0.1,)), -1)


class TestCumulativeAndDiff:

    def test_cumulative_starts_at_from_year(self):
        """Test cumulative starts at from year."""
        s = AnnualSeries(2000, (1.0, 2.0, 3.0, 4.0))

        c = cumulative(s, 2001)

        assert c.start_year == 2001
        assert c.values == (2.0, 5.0, 9.0)

    def test_cumulative_outside_span(self):
        """Test cumulative outside span."""
        with pytest.raises(RangeError):
            cumulative(AnnualSeries(2000, (1.0,)), 1999)

    def test_diff_inverts_cumulative(self, rng):
        """Test diff inverts cumulative."""
        s = AnnualSeries.from_array(1980, rng.normal(0.0, 0.02, 30))

        recovered = diff(cumulative(s, 1980))

        assert recovered.span == (1981, 2009)
        assert np.allclose(recovered.array, window(s, 1981, 2009).array, rtol=0, atol=1e-15)

    def test_scale_by_series(self):
        """Test scale by series."""
        population = AnnualSeries(2000, (100.0, 200.0, 300.0), Unit.PERSONS)
        rates = AnnualSeries(1999, (0.9, 0.5, 0.5, 0.4))

        lf = scale(population, rates)

        assert lf.values == (50.0, 100.0, 120.0)
        assert lf.unit is Unit.PERSONS


class TestCompositionLaws:
    """Algebraic laws of the series operations."""

    @pytest.fixture
    def pair(self, rng):
        return (AnnualSeries.from_array(1971, rng.normal(0, 0.02, 30), label="x"),
                AnnualSeries.from_array(1980, rng.normal(0, 0.02, 31), label="y"))

    def test_align_is_commutative(self, pair):
        """Test align(x, y) and align(y, x) give the same windows swapped."""
        x, y = pair

        forward, backward = align(x, y), align(y, x)

        assert forward.common_window == backward.common_window == (1980, 2000)
        assert (forward.x, forward.y) == (backward.y, backward.x)

    def test_align_is_idempotent(self, pair):
        """Test aligning an already aligned pair changes nothing."""
        first = align(*pair)

        again = align(first.x, first.y)

        assert (again.x, again.y, again.common_window) == (first.x, first.y, first.common_window)

    def test_nested_windows_compose(self, pair):
        """Test window of a window equals the inner window taken directly."""
        x, _ = pair

        assert window(window(x, 1975, 1995), 1980, 1990) == window(x, 1980, 1990)

    def test_lag_shifts_add(self, pair):
        """Test shifting by a then b equals shifting by a + b."""
        x, _ = pair

        for a, b in [(0, 3), (1, 1), (2, 5)]:
            assert lag_shift(lag_shift(x, a), b) == lag_shift(x, a + b)
