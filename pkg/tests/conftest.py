#!/usr/bin/env python3
"""
Pytest configuration and shared fixtures.
"""
import logging
import os
from pathlib import Path

import numpy as np
import pytest

# Set test environment variables
os.environ["LOG_LEVEL"] = "WARNING"
for name in ("LFMKIT_REGISTRY", "LFMKIT_MAX_LAG", "LFMKIT_FIT_WINDOW", "LFMKIT_HORIZON",
             "LFMKIT_PARTICIPATION_RATE", "LFMKIT_RATE_BAND", "LFMKIT_JUMP_THRESHOLD"):
    os.environ.pop(name, None)

from core.ingestion import DatasetRegistry  # noqa: E402
from core.series import AnnualSeries, Unit  # noqa: E402

DEMO_DIR = Path(__file__).resolve().parent.parent / "data" / "demo"


@pytest.fixture(autouse=True)
def setup_logging():
    """Setup logging for tests."""
    logging.basicConfig(
        level=logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


@pytest.fixture
def rng():
    """Seeded generator so random suites are repeatable."""
    return np.random.default_rng(20070101)


@pytest.fixture
def registry(tmp_path):
    """Empty registry in a temporary directory."""
    return DatasetRegistry(tmp_path / "registry")


@pytest.fixture
def demo_dir():
    return DEMO_DIR


@pytest.fixture
def make_series():
    """Builder for rate series from a start year and values."""
    def _make(start_year, values, unit=Unit.RATE, label=""):
        return AnnualSeries.from_array(start_year, values, unit, label)
    return _make


@pytest.fixture
def labor_force_levels():
    """Labor force levels 1970-2010 with a varying growth rate."""
    years = np.arange(1971, 2011)
    growth = 0.004 + 0.007 * np.sin(0.55 * (years - 1971)) - 0.0001 * (years - 1971)
    levels = [60_000_000.0]
    for g in growth:
        levels.append(levels[-1] * (1.0 + g))
    return AnnualSeries.from_array(1970, levels, Unit.PERSONS, "labor force")
