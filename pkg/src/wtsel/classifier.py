"""Jenkinson-Collison weather types from daily sea-level pressure.

The 16-point stencil is laid out as four rows of columns spaced ``lon_span``
apart, rows spaced ``lat_span`` apart (north at the top)::

            p1      p2
      p3    p4      p5    p6
      p7    p8  +   p9    p10
      p11   p12     p13   p14
            p15     p16

The inner columns sit half a column spacing either side of the centre ``+``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DIRECTIONS,
    GridSpec,
    Point,
    RegionOfInterest,
    ValidationError,
    WeatherType,
    WtSeries,
    as_point,
)

SLP_MIN_HPA = 870.0
SLP_MAX_HPA = 1090.0

# (column, row) in units of (lon_span, lat_span); column offsets are +-0.5 and +-1.5.
_STENCIL_UNITS = (
    (-0.5, 2), (0.5, 2),
    (-1.5, 1), (-0.5, 1), (0.5, 1), (1.5, 1),
    (-1.5, 0), (-0.5, 0), (0.5, 0), (1.5, 0),
    (-1.5, -1), (-0.5, -1), (0.5, -1), (1.5, -1),
    (-0.5, -2), (0.5, -2),
)


@dataclass(frozen=True)
class ClassifierConfig:
    lon_span: float = 10.0
    lat_span: float = 5.0
    u_flow: float = 6.0
    u_vort: float = 6.0
    # Explicit (s_coef, zw_south, zw_north, zs_coef); None derives them from the centre latitude.
    coefficients: tuple[float, float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.lon_span <= 0 or self.lat_span <= 0:
            raise ValidationError("stencil spans must be positive")
        if self.u_flow < 0 or self.u_vort < 0:
            raise ValidationError("weak-flow thresholds must be non-negative")

    def coefficients_at(self, lat_c: float) -> tuple[float, float, float, float]:
        if self.coefficients is not None:
            return tuple(float(c) for c in self.coefficients)
        phi = math.radians(lat_c)
        dphi = math.radians(self.lat_span)
        return (
            1.0 / math.cos(phi),
            math.sin(phi) / math.sin(phi - dphi),
            math.sin(phi) / math.sin(phi + dphi),
            1.0 / (2.0 * math.cos(phi) ** 2),
        )


@dataclass(frozen=True)
class CrossStencil:
    center: Point
    lon_span: float = 10.0
    lat_span: float = 5.0

    @property
    def offsets(self) -> tuple[tuple[float, float], ...]:
        return tuple((c * self.lon_span, r * self.lat_span) for c, r in _STENCIL_UNITS)

    def points(self) -> tuple[Point, ...]:
        lon0, lat0 = self.center
        return tuple(as_point(lon0 + dx, lat0 + dy) for dx, dy in self.offsets)

    @classmethod
    def for_config(cls, center: Point, config: ClassifierConfig) -> CrossStencil:
        return cls(as_point(*center), config.lon_span, config.lat_span)


@dataclass(frozen=True)
class FlowIndices:
    W: float
    S: float
    F: float
    ZW: float
    ZS: float
    Z: float


@dataclass(frozen=True, eq=False)
class SlpField:
    """Sea-level pressure in hPa, ``pressure`` shaped ``(n_dates, n_lat, n_lon)``."""

    grid: GridSpec
    dates: np.ndarray
    pressure: np.ndarray

    def __post_init__(self) -> None:
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        pressure = np.asarray(self.pressure, dtype=float)
        expected = (dates.size,) + self.grid.shape
        if pressure.shape != expected:
            raise ValidationError(f"pressure shape {pressure.shape}, expected {expected}")
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise ValidationError("SLP dates must be strictly increasing")
        bad = ~np.isfinite(pressure) | (pressure < SLP_MIN_HPA) | (pressure > SLP_MAX_HPA)
        if bad.any():
            d, y, x = np.argwhere(bad)[0]
            raise ValidationError(
                f"implausible SLP {float(pressure[d, y, x])!r} hPa at {dates[d]} "
                f"({self.grid.lon_values[x]}, {self.grid.lat_values[y]})"
            )
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "pressure", pressure)

    def stencil_series(self, stencil: CrossStencil) -> np.ndarray:
        """Pressure at the 16 stencil points, shape ``(n_dates, 16)``."""
        cols = []
        for lon, lat in stencil.points():
            ix, iy = self.grid.lon_index(lon), self.grid.lat_index(lat)
            if ix is None or iy is None:
                raise ValidationError(
                    f"stencil out of bounds: point ({lon}, {lat}) for centre {stencil.center} "
                    "is not on the grid"
                )
            cols.append(self.pressure[:, iy, ix])
        return np.stack(cols, axis=1)


def _indices_from_stencil(p: np.ndarray, coefs) -> tuple[np.ndarray, ...]:
    a, b, c, d = coefs
    p = np.asarray(p, dtype=float)
    P = [p[..., k] for k in range(16)]
    p1, p2, p3, p4, p5, p6, p7, p8, p9, p10, p11, p12, p13, p14, p15, p16 = P
    W = 0.5 * (p12 + p13) - 0.5 * (p4 + p5)
    S = a * (0.25 * (p5 + 2 * p9 + p13) - 0.25 * (p4 + 2 * p8 + p12))
    F = np.sqrt(W * W + S * S)
    ZW = b * (0.5 * (p15 + p16) - 0.5 * (p8 + p9)) - c * (0.5 * (p8 + p9) - 0.5 * (p1 + p2))
    ZS = d * (
        0.25 * (p6 + 2 * p10 + p14)
        - 0.25 * (p5 + 2 * p9 + p13)
        - 0.25 * (p4 + 2 * p8 + p12)
        + 0.25 * (p3 + 2 * p7 + p11)
    )
    return W, S, F, ZW, ZS, ZW + ZS


def compute_flow_indices(
    field: SlpField, date, stencil: CrossStencil, config: ClassifierConfig | None = None
) -> FlowIndices:
    config = config or ClassifierConfig(lon_span=stencil.lon_span, lat_span=stencil.lat_span)
    hits = np.flatnonzero(field.dates == np.datetime64(date, "D"))
    if hits.size == 0:
        raise ValidationError(f"date {date} not in SLP field")
    p = field.stencil_series(stencil)[hits[0]]
    vals = _indices_from_stencil(p, config.coefficients_at(stencil.center[1]))
    return FlowIndices(*(float(v) for v in vals))


def direction_sector(W, S):
    """Clockwise sector (0 = N, 1 = NE, ...) of the direction the flow comes from.

    Sectors are 45 degrees wide, centred on N, NE, ..., NW; a boundary angle
    belongs to the clockwise-next sector.
    """
    toward = np.degrees(np.arctan2(W, S))
    from_deg = np.mod(toward + 180.0, 360.0)
    return np.floor((from_deg + 22.5) / 45.0).astype(int) % 8


DIRECTIONS_CLOCKWISE = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
# Offset within a family block (DIRECTIONS order) for each clockwise sector.
_SECTOR_TO_OFFSET = np.array([DIRECTIONS.index(d) for d in DIRECTIONS_CLOCKWISE])


def classify_indices(W, S, Z, config: ClassifierConfig | None = None) -> np.ndarray:
    """Vectorised decision rules; returns 1-based weather type indices."""
    config = config or ClassifierConfig()
    W, S, Z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (W, S, Z)))
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(S)) and np.all(np.isfinite(Z))):
        raise ValidationError("flow indices must be finite")
    F = np.sqrt(W * W + S * S)
    absZ = np.abs(Z)
    offset = _SECTOR_TO_OFFSET[direction_sector(W, S)]

    out = np.empty(W.shape, dtype=np.int8)
    directional = absZ < F
    pure_rot = absZ > 2 * F
    hybrid = ~directional & ~pure_rot
    cyclonic = Z > 0

    out[directional] = WeatherType.PDNE + offset[directional]
    out[pure_rot & cyclonic] = WeatherType.PC
    out[pure_rot & ~cyclonic] = WeatherType.PA
    out[hybrid & cyclonic] = WeatherType.DCNE + offset[hybrid & cyclonic]
    out[hybrid & ~cyclonic] = WeatherType.DANE + offset[hybrid & ~cyclonic]

    weak = ((F < config.u_flow) & (absZ < config.u_vort)) | ((F == 0) & (Z == 0))
    out[weak] = WeatherType.U
    return out


def classify_day(idx: FlowIndices, config: ClassifierConfig | None = None) -> WeatherType:
    config = config or ClassifierConfig()
    if not all(math.isfinite(v) for v in (idx.W, idx.S, idx.F, idx.Z)):
        raise ValidationError(f"non-finite flow indices {idx}")
    F = idx.F
    absZ = abs(idx.Z)
    if (F < config.u_flow and absZ < config.u_vort) or (F == 0 and idx.Z == 0):
        return WeatherType.U
    if absZ > 2 * F:
        return WeatherType.PC if idx.Z > 0 else WeatherType.PA
    direction = DIRECTIONS_CLOCKWISE[int(direction_sector(idx.W, idx.S))]
    if absZ < F:
        return WeatherType[f"PD{direction}"]
    return WeatherType[f"DC{direction}" if idx.Z > 0 else f"DA{direction}"]


def classify_series(
    field: SlpField,
    roi: RegionOfInterest,
    config: ClassifierConfig | None = None,
    trajectory_id: str = "reference",
) -> WtSeries:
    config = config or ClassifierConfig()
    columns = []
    for point in roi.points:
        stencil = CrossStencil.for_config(point, config)
        try:
            p = field.stencil_series(stencil)
        except ValidationError as exc:
            first = field.dates[0] if field.dates.size else "n/a"
            raise ValidationError(f"{exc} (date {first}, ROI point {point})") from None
        W, S, _, _, _, Z = _indices_from_stencil(p, config.coefficients_at(point[1]))
        columns.append(classify_indices(W, S, Z, config))
    values = np.stack(columns, axis=1) if columns else np.empty((field.dates.size, 0))
    return WtSeries(trajectory_id, roi.points, field.dates, values)
