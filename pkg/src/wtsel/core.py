"""Shared vocabulary: weather types, grids, regions, season windows, daily series."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

N_WT = 27
COORD_DECIMALS = 6


class WtselError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(WtselError, ValueError):
    """An argument lies outside the domain of an operation."""


class ValidationError(WtselError, ValueError):
    """Input data or configuration failed validation."""


class PipelineError(WtselError):
    """One or more pipeline stages failed."""


class WeatherType(IntEnum):
    PA = 1
    DANE = 2
    DAE = 3
    DASE = 4
    DAS = 5
    DASW = 6
    DAW = 7
    DANW = 8
    DAN = 9
    PDNE = 10
    PDE = 11
    PDSE = 12
    PDS = 13
    PDSW = 14
    PDW = 15
    PDNW = 16
    PDN = 17
    PC = 18
    DCNE = 19
    DCE = 20
    DCSE = 21
    DCS = 22
    DCSW = 23
    DCW = 24
    DCNW = 25
    DCN = 26
    U = 27

    @property
    def code(self) -> str:
        return self.name

    @property
    def position(self) -> int:
        """Zero-based column used in every 27-wide array."""
        return self.value - 1


WT_CODES: tuple[str, ...] = tuple(wt.name for wt in WeatherType)

# Directional suffixes in the order they appear inside each family block.
DIRECTIONS: tuple[str, ...] = ("NE", "E", "SE", "S", "SW", "W", "NW", "N")

DEFAULT_CONDITIONING: tuple[WeatherType, ...] = (
    WeatherType.PA,
    WeatherType.PC,
    WeatherType.PDNE,
    WeatherType.U,
)
DEFAULT_WT_STAR: tuple[WeatherType, ...] = (
    WeatherType.PA,
    WeatherType.PDNE,
    WeatherType.PC,
    WeatherType.U,
)


def wt_from_index(i: int) -> WeatherType:
    if isinstance(i, bool) or int(i) != i or not 1 <= int(i) <= N_WT:
        raise DomainError(f"weather type index must be in 1..{N_WT}, got {i!r}")
    return WeatherType(int(i))


def code_to_index(code: str) -> int:
    try:
        return WeatherType[code.strip().upper()].value
    except KeyError:
        raise DomainError(f"unknown weather type code {code!r}") from None


def parse_wt(token: str | int | WeatherType) -> WeatherType:
    """Accept a WeatherType, an integer index, or a code such as ``"PDNE"``."""
    if isinstance(token, WeatherType):
        return token
    if isinstance(token, (int, np.integer)):
        return wt_from_index(int(token))
    token = str(token).strip()
    if token.isdigit():
        return wt_from_index(int(token))
    return WeatherType(code_to_index(token))


def parse_wt_list(text: str | Iterable) -> tuple[WeatherType, ...]:
    items = text.split(",") if isinstance(text, str) else list(text)
    wts = tuple(parse_wt(t) for t in items if str(t).strip())
    if not wts:
        raise DomainError("weather type list is empty")
    if len(set(wts)) != len(wts):
        raise DomainError(f"duplicate weather types in {[w.name for w in wts]}")
    return wts


def round_coord(x: float) -> float:
    return round(float(x), COORD_DECIMALS) + 0.0


Point = tuple[float, float]


def as_point(lon: float, lat: float) -> Point:
    return (round_coord(lon), round_coord(lat))


@dataclass(frozen=True)
class GridSpec:
    lon_values: tuple[float, ...]
    lat_values: tuple[float, ...]
    spacing: float = 2.5

    def __post_init__(self) -> None:
        lons = tuple(round_coord(v) for v in self.lon_values)
        lats = tuple(round_coord(v) for v in self.lat_values)
        object.__setattr__(self, "lon_values", lons)
        object.__setattr__(self, "lat_values", lats)
        for name, axis in (("lon", lons), ("lat", lats)):
            arr = np.asarray(axis, dtype=float)
            if arr.size == 0 or not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} axis must be non-empty and finite")
            if arr.size > 1:
                steps = np.diff(arr)
                if np.any(np.abs(steps - self.spacing) > 1e-9):
                    raise ValidationError(
                        f"{name} axis is not uniformly spaced at {self.spacing} degrees"
                    )

    @classmethod
    def from_axes(cls, lons: Sequence[float], lats: Sequence[float]) -> GridSpec:
        lons = sorted({round_coord(v) for v in lons})
        lats = sorted({round_coord(v) for v in lats})
        steps = np.diff(lons) if len(lons) > 1 else np.diff(lats)
        spacing = float(steps[0]) if len(steps) else 2.5
        return cls(tuple(lons), tuple(lats), spacing)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.lat_values), len(self.lon_values))

    def lon_index(self, lon: float) -> int | None:
        try:
            return self.lon_values.index(round_coord(lon))
        except ValueError:
            return None

    def lat_index(self, lat: float) -> int | None:
        try:
            return self.lat_values.index(round_coord(lat))
        except ValueError:
            return None

    def contains(self, lon: float, lat: float) -> bool:
        return self.lon_index(lon) is not None and self.lat_index(lat) is not None


@dataclass(frozen=True)
class RegionOfInterest:
    """Ordered set of grid points; order defines the row order of every field."""

    points: tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = tuple(as_point(lon, lat) for lon, lat in self.points)
        if not pts:
            raise ValidationError("region of interest has no points")
        if len(set(pts)) != len(pts):
            raise ValidationError("region of interest contains duplicate points")
        object.__setattr__(self, "points", pts)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point: Point) -> int:
        return self.points.index(as_point(*point))

    def check_on_grid(self, grid: GridSpec) -> None:
        off = [p for p in self.points if not grid.contains(*p)]
        if off:
            raise ValidationError(f"points not on grid: {off}")

    @classmethod
    def box(cls, lons: Sequence[float], lats: Sequence[float]) -> RegionOfInterest:
        return cls(tuple((lon, lat) for lat in lats for lon in lons))


DEFAULT_ROI_LONS = (-8.75, -6.25, -3.75, -1.25, 1.25, 3.75)
DEFAULT_ROI_LATS = (35.0, 37.5, 40.0, 42.5, 45.0)


def default_roi() -> RegionOfInterest:
    """6 longitudes x 5 latitudes over 35-45N, 8.75W-3.75E."""
    return RegionOfInterest.box(DEFAULT_ROI_LONS, DEFAULT_ROI_LATS)


@dataclass(frozen=True)
class SeasonWindow:
    months: frozenset[int] = field(default_factory=lambda: frozenset({6, 7, 8, 9}))
    first_year: int = 1979
    last_year: int = 2005

    def __post_init__(self) -> None:
        months = frozenset(int(m) for m in self.months)
        object.__setattr__(self, "months", months)
        if not months or not months <= set(range(1, 13)):
            raise ValidationError(f"months must be a non-empty subset of 1..12: {sorted(months)}")
        if self.first_year > self.last_year:
            raise ValidationError(f"first year {self.first_year} after last year {self.last_year}")

    def contains(self, dates: np.ndarray) -> np.ndarray:
        dates = np.asarray(dates, dtype="datetime64[D]")
        years = dates.astype("datetime64[Y]").astype(int) + 1970
        months = dates.astype("datetime64[M]").astype(int) % 12 + 1
        in_months = np.isin(months, sorted(self.months))
        return in_months & (years >= self.first_year) & (years <= self.last_year)

    def dates(self) -> np.ndarray:
        """Every in-window calendar day, ascending."""
        start = np.datetime64(f"{self.first_year:04d}-01-01")
        stop = np.datetime64(f"{self.last_year + 1:04d}-01-01")
        days = np.arange(start, stop, dtype="datetime64[D]")
        return days[self.contains(days)]

    def describe(self) -> str:
        months = ",".join(str(m) for m in sorted(self.months))
        return f"months={months} years={self.first_year}:{self.last_year}"


@dataclass(frozen=True, eq=False)
class WtSeries:
    """Daily weather types at a set of points.

    ``values`` has shape ``(n_dates, n_points)`` and holds 1-based weather type
    indices; column order follows ``points``.
    """

    trajectory_id: str
    points: tuple[Point, ...]
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        pts = tuple(as_point(lon, lat) for lon, lat in self.points)
        if len(set(pts)) != len(pts):
            raise ValidationError("series contains duplicate points")
        object.__setattr__(self, "points", pts)
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape != (dates.size, len(pts)):
            raise ValidationError(
                f"values shape {values.shape} does not match ({dates.size}, {len(pts)})"
            )
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise ValidationError("series dates must be strictly increasing")
        if values.size and (values.min() < 1 or values.max() > N_WT):
            raise ValidationError("series holds values outside 1..27")
        values = values.astype(np.int8)
        dates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def roi(self) -> RegionOfInterest:
        return RegionOfInterest(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WtSeries):
            return NotImplemented
        return (
            self.trajectory_id == other.trajectory_id
            and self.points == other.points
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.values, other.values)
        )

    def select_points(self, roi: RegionOfInterest) -> WtSeries:
        missing = [p for p in roi.points if p not in self.points]
        if missing:
            raise ValidationError(f"series lacks ROI points: {missing}")
        cols = [self.points.index(p) for p in roi.points]
        return WtSeries(self.trajectory_id, roi.points, self.dates, self.values[:, cols])


def season_mask(series: WtSeries, window: SeasonWindow) -> WtSeries:
    keep = window.contains(series.dates)
    if not keep.any():
        raise ValidationError(f"no in-window data for {window.describe()}")
    return WtSeries(series.trajectory_id, series.points, series.dates[keep], series.values[keep])
