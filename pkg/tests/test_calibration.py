#!/usr/bin/env python3
"""
Unit tests for cumulative-curve calibration.
"""
import numpy as np
import pytest

from core.calibration import (
    CoefficientGrid,
    ModelFamily,
    ModelSpec,
    SearchGrid,
    annual_rms,
    calibrate,
    cumulative_rms,
    predict_series,
)
from core.series import AnnualSeries, Unit, change_rate, lag_shift, window
from utils.exceptions import AlignmentError, RangeError, SpecificationError

WINDOW = (1982, 2006)


@pytest.fixture
def rate(labor_force_levels):
    return change_rate(labor_force_levels)


@pytest.fixture
def unemployment():
    years = np.arange(1971, 2011)
    return AnnualSeries.from_array(1971, 0.04 + 0.01 * np.sin(0.9 * years), Unit.RATE, "unemployment")


def planted_inflation(rate, A, B, lag=0):
    shifted = lag_shift(rate, lag)
    return AnnualSeries.from_array(shifted.start_year, A + B * shifted.array, Unit.RATE, "inflation")


class TestCumulativeRms:

    def test_identical_series_is_zero(self):
        """Test identical series is zero."""
        s = AnnualSeries(2000, (0.01, 0.02, -0.01))

        assert cumulative_rms(s, s, 2000) == 0.0

    def test_constant_offset(self):
        """Test a constant offset accumulates linearly."""
        observed = AnnualSeries(2000, (0.0, 0.0, 0.0))
        predicted = AnnualSeries(2000, (0.01, 0.01, 0.01))

        # running gaps 0.01, 0.02, 0.03
        expected = np.sqrt((0.01 ** 2 + 0.02 ** 2 + 0.03 ** 2) / 3)
        assert cumulative_rms(observed, predicted, 2000) == pytest.approx(expected, rel=1e-12)

    def test_from_year_restricts_sum(self):
        """Test from year restricts sum."""
        observed = AnnualSeries(2000, (5.0, 0.0, 0.0))
        predicted = AnnualSeries(2000, (0.0, 0.0, 0.0))

        assert cumulative_rms(observed, predicted, 2001) == 0.0

    def test_end_years_must_match(self):
        """Test end years must match."""
        with pytest.raises(AlignmentError):
            cumulative_rms(AnnualSeries(2000, (0.0, 0.0)), AnnualSeries(2000, (0.0,)), 2000)

    def test_annual_rms(self):
        """Test annual RMS diagnostic."""
        observed = AnnualSeries(2000, (0.0, 0.0))
        predicted = AnnualSeries(2000, (0.03, -0.04))

        assert annual_rms(observed, predicted) == pytest.approx(np.sqrt(0.00125), rel=1e-12)


class TestSearchGrid:

    def test_default_node_counts(self):
        """Test default node counts."""
        grid = SearchGrid.default(ModelFamily.SINGLE_DRIVER)

        assert [axis.name for axis in grid.axes] == ["A", "B"]
        assert len(grid.axes[0].nodes()) == 41
        assert len(grid.axes[1].nodes()) == 101

    def test_generalized_default_has_no_lag(self):
        """Test generalized default has no lag."""
        grid = SearchGrid.default(ModelFamily.GENERALIZED, (0, 3))

        assert grid.lag_range == (0, 0)
        assert [axis.name for axis in grid.axes] == ["D1", "D2", "D3"]

    @pytest.mark.parametrize("lower, upper, step", [(0.0, 1.0, 0.0), (1.0, 0.0, 0.1), (0.0, float("inf"), 0.1)])
    def test_empty_grid(self, lower, upper, step):
        """Test empty grid."""
        with pytest.raises(SpecificationError):
            CoefficientGrid("A", lower, upper, step).nodes()


class TestModelSpec:

    def test_cumulative_start_defaults_to_window_start(self, labor_force_levels, rate):
        """Test cumulative start defaults to window start."""
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, rate, WINDOW)

        assert spec.cumulative_start == 1982

    def test_cumulative_start_outside_window(self, labor_force_levels, rate):
        """Test cumulative start outside window."""
        with pytest.raises(SpecificationError):
            ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, rate, WINDOW, cumulative_start=1980)

    def test_generalized_needs_unemployment(self, labor_force_levels, rate):
        """Test generalized needs unemployment."""
        with pytest.raises(SpecificationError):
            ModelSpec(ModelFamily.GENERALIZED, labor_force_levels, rate, WINDOW)

    def test_predict_checks_arity(self, labor_force_levels, rate):
        """Test predict checks arity."""
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, rate, WINDOW)

        with pytest.raises(SpecificationError):
            predict_series(spec, (0.1, 0.2, 0.3))

    def test_design_gap_is_range_error(self, labor_force_levels, rate):
        """Test design gap is range error."""
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, rate, (1972, 2006))

        with pytest.raises(RangeError) as exc_info:
            spec.design(lag=5)

        assert exc_info.value.details["lag"] == 5


class TestCalibrate:
    """Planted-solution recovery."""

    def test_recovers_single_driver_plant(self, labor_force_levels, rate):
        """Test recovers single driver plant."""
        target = planted_inflation(rate, 0.0007, 1.31)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        result = calibrate(spec)

        assert result.lag == 0
        assert result.coefficients["A"] == pytest.approx(0.0007, abs=1e-4)
        assert result.coefficients["B"] == pytest.approx(1.31, abs=1e-4)
        assert result.objective < 1e-8
        assert result.annual_rms < 1e-6

    def test_recovers_generalized_plant(self, labor_force_levels, rate, unemployment):
        """Test recovers generalized plant."""
        pair_years = range(1971, 2011)
        target = AnnualSeries.from_array(
            1971,
            [2.8 * rate.value_at(t) + 0.9 * unemployment.value_at(t) - 0.0392 for t in pair_years],
            Unit.RATE, "inflation"
        )
        spec = ModelSpec(ModelFamily.GENERALIZED, labor_force_levels, target, WINDOW,
                         unemployment=unemployment)

        result = calibrate(spec)

        assert result.coefficient_tuple() == pytest.approx((2.8, 0.9, -0.0392), abs=1e-4)
        assert result.objective < 1e-8

    def test_recovers_planted_lag(self, labor_force_levels, rate):
        """Test recovers planted lag."""
        target = planted_inflation(rate, 0.002, 1.0, lag=2)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        result = calibrate(spec, SearchGrid.default(ModelFamily.SINGLE_DRIVER, (0, 4)))

        assert result.lag == 2
        assert result.coefficients["B"] == pytest.approx(1.0, abs=1e-4)

    def test_rate_series_accepted_as_driver(self, rate):
        """Test rate series accepted as driver."""
        target = planted_inflation(rate, 0.0007, 1.31)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, rate, target, WINDOW)

        result = calibrate(spec)

        assert result.coefficients["B"] == pytest.approx(1.31, abs=1e-4)

    def test_deterministic(self, labor_force_levels, rate):
        """Test repeated calibration returns identical results."""
        target = planted_inflation(rate, 0.01, -0.5)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        assert calibrate(spec) == calibrate(spec)

    def test_trace_records_stages(self, labor_force_levels, rate):
        """Test trace records stages."""
        target = planted_inflation(rate, 0.0007, 1.31)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        result = calibrate(spec)

        assert result.trace[0].stage == "grid"
        assert result.evaluations >= 41 * 101

    def test_solution_stays_in_bounds(self, labor_force_levels, rate):
        """Test solution stays in bounds."""
        target = planted_inflation(rate, 0.0, 9.0)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        result = calibrate(spec)

        assert -5.0 <= result.coefficients["B"] <= 5.0

    def test_axis_names_must_match(self, labor_force_levels, rate):
        """Test axis names must match."""
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, rate, WINDOW)
        grid = SearchGrid((CoefficientGrid("B", -1, 1, 0.1), CoefficientGrid("A", -1, 1, 0.1)))

        with pytest.raises(SpecificationError):
            calibrate(spec, grid)

    def test_generalized_rejects_lag_range(self, labor_force_levels, rate, unemployment):
        """Test generalized rejects lag range."""
        spec = ModelSpec(ModelFamily.GENERALIZED, labor_force_levels, rate, WINDOW, unemployment=unemployment)
        grid = SearchGrid(SearchGrid.default(ModelFamily.GENERALIZED).axes, (0, 2))

        with pytest.raises(SpecificationError):
            calibrate(spec, grid)

    def test_no_covered_lag(self, labor_force_levels, rate):
        """Test no covered lag."""
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, rate, (1971, 2006))

        with pytest.raises(RangeError):
            calibrate(spec, SearchGrid.default(ModelFamily.SINGLE_DRIVER, (1, 2)))

    def test_predict_matches_plant(self, labor_force_levels, rate):
        """Test predict matches plant."""
        target = planted_inflation(rate, 0.0007, 1.31)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        predicted = predict_series(spec, {"A": 0.0007, "B": 1.31})

        assert np.allclose(predicted.array, window(target, *WINDOW).array, rtol=0, atol=1e-15)


def planted_generalized(rate, unemployment, D1, D2, D3):
    years = range(max(rate.start_year, unemployment.start_year), min(rate.end_year, unemployment.end_year) + 1)
    return AnnualSeries.from_array(
        years[0],
        [D1 * rate.value_at(t) + D2 * unemployment.value_at(t) + D3 for t in years],
        Unit.RATE, "inflation"
    )


class TestCalibrationOptimality:
    """The returned point is never beaten by points the search could reach."""

    def test_no_random_in_bounds_point_is_better(self, rng, labor_force_levels, rate):
        """Test 100 random in-bounds coefficient pairs never beat the result."""
        noisy = planted_inflation(rate, 0.0007, 1.31)
        target = AnnualSeries.from_array(noisy.start_year, noisy.array + rng.normal(0, 0.003, len(noisy)),
                                         Unit.RATE, "inflation")
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        result = calibrate(spec)

        for _ in range(100):
            point = (rng.uniform(-0.1, 0.1), rng.uniform(-5.0, 5.0))
            value = cumulative_rms(spec.observed(), predict_series(spec, point, result.lag), spec.cumulative_start)
            assert result.objective <= value + 1e-15

    def test_result_is_no_worse_than_any_trace_entry(self, rng, labor_force_levels, rate):
        """Test the returned objective is the minimum of the search trace."""
        noisy = planted_inflation(rate, 0.002, -0.8, lag=1)
        target = AnnualSeries.from_array(noisy.start_year, noisy.array + rng.normal(0, 0.002, len(noisy)),
                                         Unit.RATE, "inflation")
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)

        result = calibrate(spec, SearchGrid.default(ModelFamily.SINGLE_DRIVER, (0, 3)))

        assert all(result.objective <= entry.objective for entry in result.trace)

    def test_bound_on_slope_reaches_bounded_optimum(self, labor_force_levels, rate, unemployment):
        """Test a binding upper bound on D1 still yields the exact bounded optimum."""
        target = planted_generalized(rate, unemployment, 2.8, 0.9, -0.0392)
        spec = ModelSpec(ModelFamily.GENERALIZED, labor_force_levels, target, WINDOW, unemployment=unemployment)
        default = SearchGrid.default(ModelFamily.GENERALIZED)
        grid = SearchGrid((CoefficientGrid("D1", -5.0, 2.5, 0.1), *default.axes[1:]))

        result = calibrate(spec, grid)

        # With D1 pinned at its bound the remaining problem is unconstrained
        cum_design = np.cumsum(spec.design(0), axis=0)
        rest = np.cumsum(spec.observed().array) - 2.5 * cum_design[:, 0]
        solution, *_ = np.linalg.lstsq(cum_design[:, 1:], rest, rcond=None)
        expected = float(np.sqrt(np.mean((rest - cum_design[:, 1:] @ solution) ** 2)))

        assert result.coefficients["D1"] == pytest.approx(2.5, abs=1e-9)
        assert result.objective == pytest.approx(expected, rel=1e-6)

    def test_fixed_axis_is_respected(self, labor_force_levels, rate):
        """Test an axis with equal bounds keeps its value through the polish."""
        target = planted_inflation(rate, 0.0007, 1.31)
        spec = ModelSpec(ModelFamily.SINGLE_DRIVER, labor_force_levels, target, WINDOW)
        grid = SearchGrid((CoefficientGrid("A", 0.0, 0.0, 0.005), CoefficientGrid("B", -5.0, 5.0, 0.1)))

        result = calibrate(spec, grid)

        assert result.coefficients["A"] == 0.0
        assert -5.0 <= result.coefficients["B"] <= 5.0
