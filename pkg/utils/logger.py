"""
Logging utilities for the lfmkit toolkit.
"""
import logging
import os
import sys
from typing import Optional

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logger(
    name: Optional[str] = None,
    level: str = "INFO",
    format_string: Optional[str] = None
) -> logging.Logger:
    """Setup logger with consistent formatting.

    Handlers write to stderr; stdout carries data tables and reports.
    """
    if not format_string:
        format_string = os.getenv("LOG_FORMAT", DEFAULT_FORMAT)

    log_level = getattr(logging, os.getenv("LOG_LEVEL", level).upper(), logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # Remove existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(format_string))
    logger.addHandler(console_handler)

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the specified name."""
    return logging.getLogger(name)


class PipelineLogger:
    """Event logger for fitting, calibration, registry and projection steps."""

    def __init__(self, component: str):
        self.component = component
        self.logger = get_logger(f"lfmkit.{component}")

    def log_fit(self, relation: str, lag: int, r_squared: float, n: int) -> None:
        self.logger.info(
            f"FIT | Relation: {relation} | Lag: {lag} | R2: {r_squared:.6g} | N: {n}"
        )

    def log_lag_skipped(self, lag: int, reason: str) -> None:
        self.logger.warning(f"LAG_SKIPPED | Lag: {lag} | Reason: {reason}")

    def log_calibration(self, family: str, lag: int, objective: float, evaluations: int) -> None:
        self.logger.info(
            f"CALIBRATION | Family: {family} | Lag: {lag} | "
            f"Objective: {objective:.6g} | Evaluations: {evaluations}"
        )

    def log_registry_operation(self, operation: str, key: str, success: bool) -> None:
        status = "SUCCESS" if success else "FAILED"
        self.logger.info(f"REGISTRY | Operation: {operation} | Key: {key} | Status: {status}")

    def log_finding(self, severity: str, year: int | None, message: str) -> None:
        log_method = self.logger.error if severity == "error" else self.logger.warning
        log_method(f"FINDING | Severity: {severity} | Year: {year} | {message}")

    def log_projection(self, scenario: str, first: int, last: int, notes: int) -> None:
        self.logger.info(
            f"PROJECTION | Scenario: {scenario} | Horizon: {first}-{last} | Notes: {notes}"
        )
