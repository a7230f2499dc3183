"""
Published coefficient sets shipped as named models.
"""
import logging
from typing import Dict, List

from core.models import (
    FittedBy,
    GeneralizedModel,
    LaggedLinearModel,
    Model,
    PhillipsModel,
    Target,
    intercept_adjust,
)
from utils.exceptions import DatasetNotFoundError

PHILLIPS_ELEVATION = 0.004


class PresetManager:
    """Manager for preset models, looked up by name."""

    def __init__(self):
        self.logger = logging.getLogger("lfmkit.presets")

        phillips = PhillipsModel(
            slope=-0.94,
            intercept=0.041,
            lag=0,
            window=(1982, 2006),
            fitted_by=FittedBy.PRESET,
            name="paper-japan-phillips",
            note="raw regression of unemployment on CPI inflation",
        )
        elevated = intercept_adjust(phillips, PHILLIPS_ELEVATION)

        self.presets: Dict[str, Model] = {
            "paper-japan-phillips": phillips,
            "paper-japan-phillips-elevated": PhillipsModel(
                slope=elevated.slope,
                intercept=elevated.intercept,
                lag=elevated.lag,
                window=elevated.window,
                fitted_by=FittedBy.PRESET,
                name="paper-japan-phillips-elevated",
                note=elevated.note + " to follow the last ten years",
            ),
            "paper-japan-cpi": LaggedLinearModel(
                target=Target.INFLATION,
                A=0.0007,
                B=1.31,
                t0=0,
                fitted_by=FittedBy.PRESET,
                window=(1982, 2006),
                name="paper-japan-cpi",
                note="CPI inflation on labor force change rate",
            ),
            "paper-japan-ue": LaggedLinearModel(
                target=Target.UNEMPLOYMENT,
                A=0.045,
                B=-1.5,
                t0=0,
                fitted_by=FittedBy.PRESET,
                window=(1982, 2006),
                name="paper-japan-ue",
                note="unemployment on labor force change rate",
            ),
            "paper-japan-gen": GeneralizedModel(
                D1=2.8,
                D2=0.9,
                D3=-0.0392,
                window=(1982, 2006),
                fitted_by=FittedBy.PRESET,
                name="paper-japan-gen",
                note="CPI inflation on labor force change rate and unemployment",
            ),
            "japan-cpi-imputed-rent": LaggedLinearModel(
                target=Target.INFLATION,
                A=-0.0035,
                B=1.77,
                t0=0,
                fitted_by=FittedBy.PRESET,
                window=(1981, 2003),
                name="japan-cpi-imputed-rent",
                note="earlier cumulative fit; CPI variant with imputed rent, not comparable one-to-one",
            ),
        }

    def get_preset(self, name: str) -> Model:
        """Get a preset model by name."""
        if name not in self.presets:
            raise DatasetNotFoundError(
                f"Unknown preset: {name}",
                error_code="UNKNOWN_PRESET",
                details={"available": self.list_presets()}
            )
        return self.presets[name]

    def list_presets(self) -> List[str]:
        return sorted(self.presets)
