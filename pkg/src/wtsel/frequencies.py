"""Joint, daily, conditional and persistence relative frequencies per grid point.

Array conventions: ``rf[s, i, j]`` is the relative frequency of weather type
``i`` today and ``j`` yesterday at point ``s`` (zero-based positions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    N_WT,
    RegionOfInterest,
    SeasonWindow,
    ValidationError,
    WeatherType,
    WtSeries,
    parse_wt,
    season_mask,
)

DEFAULT_MIN_SUPPORT = 30
CURRENT_DAY = "current"
PREVIOUS_DAY = "previous"


@dataclass(frozen=True, eq=False)
class JointFrequencyField:
    roi: RegionOfInterest
    rf: np.ndarray
    pair_count: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self) -> None:
        rf = np.asarray(self.rf, dtype=float)
        n = self.roi.n_points
        if rf.shape != (n, N_WT, N_WT):
            raise ValidationError(f"joint rf shape {rf.shape}, expected {(n, N_WT, N_WT)}")
        if np.any(rf < 0) or not np.all(np.isfinite(rf)):
            raise ValidationError("joint rf must be finite and non-negative")
        pair_count = np.asarray(self.pair_count, dtype=float).reshape(n)
        object.__setattr__(self, "rf", rf)
        object.__setattr__(self, "pair_count", pair_count)
        if self.counts is not None:
            object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JointFrequencyField):
            return NotImplemented
        same_counts = (self.counts is None and other.counts is None) or (
            self.counts is not None
            and other.counts is not None
            and np.array_equal(self.counts, other.counts)
        )
        return (
            self.roi == other.roi
            and np.array_equal(self.rf, other.rf)
            and np.array_equal(self.pair_count, other.pair_count, equal_nan=True)
            and same_counts
        )

    def check_sums(self, tol: float = 1e-9) -> None:
        sums = self.rf.sum(axis=(1, 2))
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            s = int(bad[0])
            raise ValidationError(
                f"joint rf at point {self.roi.points[s]} sums to {float(sums[s])!r}, not 1"
            )


@dataclass(frozen=True, eq=False)
class MarginalField:
    roi: RegionOfInterest
    rf_daily: np.ndarray
    axis_tag: str


@dataclass(frozen=True, eq=False)
class ConditionalField:
    """Distribution of today's type given yesterday's ``conditioning_wt``.

    ``rf_cond`` rows are NaN where ``defined`` is False.
    """

    roi: RegionOfInterest
    conditioning_wt: WeatherType
    rf_cond: np.ndarray
    support: np.ndarray
    defined: np.ndarray


@dataclass(frozen=True, eq=False)
class PersistenceField:
    roi: RegionOfInterest
    per_rf: np.ndarray
    defined: np.ndarray


def transition_pairs(dates: np.ndarray) -> np.ndarray:
    """Boolean mask over rows 1..n-1: True where (row-1, row) is a one-day step in one year."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    if dates.size < 2:
        return np.zeros(0, dtype=bool)
    one_day = np.diff(dates) == np.timedelta64(1, "D")
    years = dates.astype("datetime64[Y]")
    return one_day & (years[1:] == years[:-1])


def count_blocks(dates: np.ndarray) -> int:
    """Number of maximal runs of consecutive same-year days."""
    dates = np.asarray(dates)
    if dates.size == 0:
        return 0
    return int(1 + np.count_nonzero(~transition_pairs(dates)))


def build_joint(
    series: WtSeries,
    window: SeasonWindow | None = None,
    roi: RegionOfInterest | None = None,
) -> JointFrequencyField:
    if window is not None:
        series = season_mask(series, window)
    if roi is not None:
        series = series.select_points(roi)
    roi = series.roi
    valid = transition_pairs(series.dates)
    n_pairs = int(valid.sum())
    if n_pairs == 0:
        raise ValidationError(
            f"series {series.trajectory_id!r} has no consecutive-day pairs inside the window"
        )
    values = series.values.astype(np.int64) - 1
    today = values[1:][valid]
    prev = values[:-1][valid]
    n_points = roi.n_points
    flat = np.arange(n_points)[None, :] * (N_WT * N_WT) + today * N_WT + prev
    counts = np.bincount(flat.ravel(), minlength=n_points * N_WT * N_WT)
    counts = counts.reshape(n_points, N_WT, N_WT)
    pair_count = np.full(n_points, n_pairs, dtype=float)
    rf = counts / pair_count[:, None, None]
    return JointFrequencyField(roi, rf, pair_count, counts)


def _marginal(joint: JointFrequencyField, axis: int) -> np.ndarray:
    # From counts when available: one rounding per entry instead of 27.
    if joint.counts is not None:
        return joint.counts.sum(axis=axis) / joint.pair_count[:, None]
    return joint.rf.sum(axis=axis)


def marginal_current(joint: JointFrequencyField) -> MarginalField:
    return MarginalField(joint.roi, _marginal(joint, 2), CURRENT_DAY)


def marginal_previous(joint: JointFrequencyField) -> MarginalField:
    return MarginalField(joint.roi, _marginal(joint, 1), PREVIOUS_DAY)


def _support(joint: JointFrequencyField) -> np.ndarray:
    """Days with each yesterday-type, shape (n_points, 27)."""
    if joint.counts is not None:
        return joint.counts.sum(axis=1).astype(float)
    return joint.rf.sum(axis=1) * joint.pair_count[:, None]


def _defined(support: np.ndarray, rf_prev: np.ndarray, min_support: int) -> np.ndarray:
    # NaN support (rf-only input) falls back to "yesterday-type observed at all".
    with np.errstate(invalid="ignore"):
        enough = np.where(np.isnan(support), True, support >= min_support - 1e-9)
    return enough & (rf_prev > 0)


def conditional_all(joint: JointFrequencyField, min_support: int = DEFAULT_MIN_SUPPORT):
    """All 27 conditional distributions at once.

    Returns ``(rf_cond, support, defined)`` where ``rf_cond[s, j, i]`` is the
    frequency of ``i`` today given ``j`` yesterday (NaN where undefined).
    """
    rf_prev = _marginal(joint, 1)
    support = _support(joint)
    defined = _defined(support, rf_prev, min_support)
    with np.errstate(invalid="ignore", divide="ignore"):
        if joint.counts is not None:
            rf_cond = np.transpose(joint.counts, (0, 2, 1)) / support[:, :, None]
        else:
            rf_cond = np.transpose(joint.rf, (0, 2, 1)) / rf_prev[:, :, None]
    rf_cond[~defined] = np.nan
    return rf_cond, support, defined


def count_distributions(joint: JointFrequencyField, mode=None, min_support: int = DEFAULT_MIN_SUPPORT):
    """Integer numerators and denominators behind a daily or conditional distribution.

    ``mode`` None gives the daily distribution, ``"all"`` every conditional
    at once (leading axes ``(n_points, 27)``), a weather type one conditional.
    Returns ``(numerators, denominators, defined)`` or None for rf-only fields.
    """
    if joint.counts is None:
        return None
    counts = joint.counts
    if mode is None:
        num = counts.sum(axis=2)
        den = num.sum(axis=1)
        return num, den, den > 0
    num = np.transpose(counts, (0, 2, 1))
    den = num.sum(axis=2)
    defined = (den >= min_support) & (den > 0)
    if isinstance(mode, str) and mode == "all":
        return num, den, defined
    k = parse_wt(mode).position
    return num[:, k, :], den[:, k], defined[:, k]


def conditional(
    joint: JointFrequencyField, j, min_support: int = DEFAULT_MIN_SUPPORT
) -> ConditionalField:
    wt = parse_wt(j)
    rf_cond, support, defined = conditional_all(joint, min_support)
    k = wt.position
    return ConditionalField(joint.roi, wt, rf_cond[:, k, :], support[:, k], defined[:, k])


def persistence(joint: JointFrequencyField, min_support: int = DEFAULT_MIN_SUPPORT) -> PersistenceField:
    rf_cond, _, defined = conditional_all(joint, min_support)
    diag = np.arange(N_WT)
    return PersistenceField(joint.roi, rf_cond[:, diag, diag], defined)
