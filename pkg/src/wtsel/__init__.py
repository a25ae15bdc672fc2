"""Weather-type based selection and ranking of climate model trajectories."""

from .core import (
    DEFAULT_CONDITIONING,
    DEFAULT_WT_STAR,
    N_WT,
    DomainError,
    GridSpec,
    PipelineError,
    RegionOfInterest,
    SeasonWindow,
    ValidationError,
    WeatherType,
    WtselError,
    WtSeries,
    default_roi,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONDITIONING",
    "DEFAULT_WT_STAR",
    "N_WT",
    "DomainError",
    "GridSpec",
    "PipelineError",
    "RegionOfInterest",
    "SeasonWindow",
    "ValidationError",
    "WeatherType",
    "WtselError",
    "WtSeries",
    "default_roi",
]
