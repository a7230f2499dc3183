"""
Configuration settings for the lfmkit toolkit.
"""
import os
from typing import List, Tuple

from dotenv import load_dotenv


def parse_year_pair(text: str) -> Tuple[int, int]:
    """Parse a 'FIRST:LAST' year pair."""
    first_text, sep, last_text = text.strip().partition(":")
    if not sep:
        raise ValueError(f"Expected FIRST:LAST, got '{text}'")
    first, last = int(first_text), int(last_text)
    if first > last:
        raise ValueError(f"First year {first} is after last year {last}")
    return first, last


class Settings:
    """Application settings loaded from environment variables."""

    def __init__(self):
        # .env in the working directory fills gaps; real environment wins
        load_dotenv(override=False)

        # Storage
        self.REGISTRY_PATH = os.getenv("LFMKIT_REGISTRY", "data/registry")

        # Logging configuration
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
        self.LOG_FORMAT = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

        # Estimation defaults
        self.MAX_LAG = os.getenv("LFMKIT_MAX_LAG", "6")
        self.FIT_WINDOW = os.getenv("LFMKIT_FIT_WINDOW", "1982:2006")

        # Projection defaults
        self.HORIZON = os.getenv("LFMKIT_HORIZON", "2007:2050")
        self.PARTICIPATION_RATE = os.getenv("LFMKIT_PARTICIPATION_RATE", "0.521")

        # Validation thresholds
        self.RATE_BAND = os.getenv("LFMKIT_RATE_BAND", "0.25")
        self.JUMP_THRESHOLD = os.getenv("LFMKIT_JUMP_THRESHOLD", "0.10")

    def validate(self) -> List[str]:
        """Validate configuration settings; returns the list of problems."""
        problems: List[str] = []

        for name in ("FIT_WINDOW", "HORIZON"):
            try:
                parse_year_pair(getattr(self, name))
            except ValueError as e:
                problems.append(f"{name}: {e}")

        try:
            if int(self.MAX_LAG) < 0:
                problems.append("MAX_LAG: must be >= 0")
        except ValueError:
            problems.append(f"MAX_LAG: not an integer: '{self.MAX_LAG}'")

        for name in ("RATE_BAND", "JUMP_THRESHOLD"):
            try:
                if float(getattr(self, name)) <= 0:
                    problems.append(f"{name}: must be positive")
            except ValueError:
                problems.append(f"{name}: not a number: '{getattr(self, name)}'")

        try:
            rate = float(self.PARTICIPATION_RATE)
            if not 0.0 < rate <= 1.0:
                problems.append("PARTICIPATION_RATE: must be in (0, 1]")
        except ValueError:
            problems.append(f"PARTICIPATION_RATE: not a number: '{self.PARTICIPATION_RATE}'")

        return problems

    # Typed accessors; call validate() first

    @property
    def max_lag(self) -> int:
        return int(self.MAX_LAG)

    @property
    def fit_window(self) -> Tuple[int, int]:
        return parse_year_pair(self.FIT_WINDOW)

    @property
    def horizon(self) -> Tuple[int, int]:
        return parse_year_pair(self.HORIZON)

    @property
    def participation_rate(self) -> float:
        return float(self.PARTICIPATION_RATE)

    @property
    def rate_band(self) -> float:
        return float(self.RATE_BAND)

    @property
    def jump_threshold(self) -> float:
        return float(self.JUMP_THRESHOLD)
