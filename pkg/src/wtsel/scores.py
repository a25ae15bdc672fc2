"""Regional scores, overlap range bins, winner maps and score correlations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import math

import numpy as np
import pandas as pd

from .core import (
    DEFAULT_WT_STAR,
    N_WT,
    DomainError,
    RegionOfInterest,
    ValidationError,
    WeatherType,
    parse_wt_list,
)
from .frequencies import (
    DEFAULT_MIN_SUPPORT,
    JointFrequencyField,
    PersistenceField,
    conditional_all,
    count_distributions,
    marginal_current,
    persistence,
)
from .similarity import (
    ALL,
    SimilarityField,
    SubsetStrategy,
    check_same_roi,
    exact_overlap,
    similarity_field,
    similarity_values,
)

SCORE_NAMES = ("DR", "CR_loc", "CR_loc_star", "CR_reg", "CR_reg_star", "PerR", "PerR_star")
BIN_LABELS = ("[0,0.80]", "(0.80,0.88]", "(0.88,0.95)", "[0.95,1]")


def _positions(wt_subset) -> np.ndarray:
    if wt_subset is None:
        return np.arange(N_WT)
    wts = parse_wt_list(wt_subset)
    return np.array([wt.position for wt in wts])


def conditional_similarities(
    ref: JointFrequencyField,
    model: JointFrequencyField,
    min_support: int = DEFAULT_MIN_SUPPORT,
    metric: str = "overlap",
    strategy: SubsetStrategy = ALL,
) -> np.ndarray:
    """Similarity of the conditional distributions, shape (n_points, 27) indexed [s, j]."""
    check_same_roi(ref.roi, model.roi)
    if metric == "overlap" and ref.counts is not None and model.counts is not None:
        return exact_overlap(
            count_distributions(ref, "all", min_support),
            count_distributions(model, "all", min_support),
            strategy,
        )
    ref_cond, _, _ = conditional_all(ref, min_support)
    mod_cond, _, _ = conditional_all(model, min_support)
    return similarity_values(ref_cond, mod_cond, metric, strategy)


def dr(daily_field: SimilarityField) -> float:
    v = daily_field.values
    return math.fsum(v[~np.isnan(v)])


def cr_loc(cond_overlaps, weights, wt_subset=None, totals=None) -> float:
    """Conditional overlaps weighted by the reference daily rf at each point.

    ``cond_overlaps`` and ``weights`` are (n_points, 27) arrays indexed [s, j].
    With ``totals`` given, ``weights`` are day counts and each point's sum is
    divided by its total, which keeps the perfect-model value exact.
    """
    cols = _positions(wt_subset)
    o = np.nan_to_num(np.asarray(cond_overlaps, dtype=float)[:, cols], nan=0.0)
    w = np.asarray(weights, dtype=float)[:, cols]
    if totals is None:
        return math.fsum((o * w).ravel())
    totals = np.asarray(totals, dtype=float)
    return math.fsum(math.fsum(o[s] * w[s]) / totals[s] for s in range(o.shape[0]))


def cr_loc_star(cond_overlaps, weights, wt_subset=DEFAULT_WT_STAR, totals=None) -> float:
    if wt_subset is None or len(wt_subset) == 0:
        raise DomainError("relevant weather type subset is empty")
    return cr_loc(cond_overlaps, weights, wt_subset, totals)


def _medians(weights, totals=None) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if totals is not None:
        totals = np.asarray(totals, dtype=float)
        if np.all(totals == totals[0]):
            # Equal totals: the median of counts carries the same weights exactly.
            return np.median(w, axis=0)
        w = w / totals[:, None]
    return np.median(w, axis=0)


def regional_weights(weights, totals=None) -> np.ndarray:
    """Median rf of each type across points, normalised over all 27 types."""
    med = _medians(weights, totals)
    total = math.fsum(med)
    if total <= 0:
        raise DomainError("median reference frequencies sum to zero")
    return med / total


def cr_reg(cond_overlaps, weights, wt_subset=None, totals=None) -> float:
    cols = _positions(wt_subset)
    o = np.nan_to_num(np.asarray(cond_overlaps, dtype=float), nan=0.0)
    per_type = np.array([math.fsum(o[:, k]) for k in range(o.shape[1])])
    med = _medians(weights, totals)
    total = math.fsum(med)
    if total <= 0:
        raise DomainError("median reference frequencies sum to zero")
    return math.fsum(per_type[cols] * med[cols]) / total


def cr_reg_star(cond_overlaps, weights, wt_subset=DEFAULT_WT_STAR, totals=None) -> float:
    if wt_subset is None or len(wt_subset) == 0:
        raise DomainError("relevant weather type subset is empty")
    return cr_reg(cond_overlaps, weights, wt_subset, totals)


def perr(
    persistence_ref: PersistenceField,
    persistence_model: PersistenceField,
    wt_subset=None,
    norm: str = "abs",
) -> tuple[float, float]:
    """Summed persistence error (lower is better) and the fraction of cells used."""
    check_same_roi(persistence_ref.roi, persistence_model.roi)
    cols = _positions(wt_subset)
    ok = (persistence_ref.defined & persistence_model.defined)[:, cols]
    diff = (persistence_model.per_rf - persistence_ref.per_rf)[:, cols]
    if norm == "abs":
        err = np.abs(diff)
    elif norm == "squared":
        err = diff * diff
    else:
        raise DomainError(f"unknown norm {norm!r}")
    return math.fsum(err[ok]), float(ok.mean())


def perr_star(persistence_ref, persistence_model, wt_subset=DEFAULT_WT_STAR, norm: str = "abs"):
    if wt_subset is None or len(wt_subset) == 0:
        raise DomainError("relevant weather type subset is empty")
    return perr(persistence_ref, persistence_model, wt_subset, norm)


def normalize(score: float, n_points: int) -> float:
    if n_points < 1:
        raise DomainError("number of points must be >= 1")
    return score / n_points


@dataclass
class ScoreRow:
    trajectory_id: str
    DR: float
    CR_loc: float
    CR_loc_star: float
    CR_reg: float
    CR_reg_star: float
    PerR: float
    PerR_star: float
    coverage: float
    stage_counts: dict[str, int | None] = field(default_factory=dict)
    retained: bool | None = None

    def score(self, name: str) -> float:
        return getattr(self, name)


def score_trajectory(
    ref: JointFrequencyField,
    model: JointFrequencyField,
    trajectory_id: str = "",
    wt_star=DEFAULT_WT_STAR,
    min_support: int = DEFAULT_MIN_SUPPORT,
    strategy: SubsetStrategy = ALL,
    norm: str = "abs",
) -> ScoreRow:
    """All regional scores of one candidate against the reference (Overlap based)."""
    daily = similarity_field(ref, model, "overlap", None, strategy, min_support)
    cond = conditional_similarities(ref, model, min_support, "overlap", strategy)
    if ref.counts is not None:
        weights, totals = ref.counts.sum(axis=2), ref.pair_count
    else:
        weights, totals = marginal_current(ref).rf_daily, None
    per_ref, per_mod = persistence(ref, min_support), persistence(model, min_support)
    per_all, coverage = perr(per_ref, per_mod, None, norm)
    per_star, _ = perr_star(per_ref, per_mod, wt_star, norm)
    return ScoreRow(
        trajectory_id=trajectory_id,
        DR=dr(daily),
        CR_loc=cr_loc(cond, weights, None, totals),
        CR_loc_star=cr_loc_star(cond, weights, wt_star, totals),
        CR_reg=cr_reg(cond, weights, None, totals),
        CR_reg_star=cr_reg_star(cond, weights, wt_star, totals),
        PerR=per_all,
        PerR_star=per_star,
        coverage=coverage,
    )


@dataclass(frozen=True)
class RangeBinRow:
    trajectory_id: str
    mode: str
    counts: tuple[int, int, int, int]
    min: float
    max: float

    @property
    def n_defined(self) -> int:
        return sum(self.counts)


def bin_index(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return np.select([v <= 0.80, v <= 0.88, v < 0.95], [0, 1, 2], default=3)


def range_bins(field: SimilarityField, trajectory_id: str = "") -> RangeBinRow:
    v = field.values[field.defined]
    if v.size == 0:
        raise DomainError("no defined values to bin")
    if np.any((v < 0) | (v > 1)):
        raise DomainError("range bins expect values in [0, 1]")
    counts = np.bincount(bin_index(v), minlength=4)
    return RangeBinRow(
        trajectory_id, field.mode, tuple(int(c) for c in counts), float(v.min()), float(v.max())
    )


@dataclass(frozen=True, eq=False)
class WinnerMap:
    roi: RegionOfInterest
    mode: str
    winners: tuple[str | None, ...]
    values: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WinnerMap):
            return NotImplemented
        return (
            self.roi == other.roi
            and self.mode == other.mode
            and self.winners == other.winners
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def win_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for w in self.winners:
            if w is not None:
                out[w] = out.get(w, 0) + 1
        return out


def winner_map(fields: Mapping[str, SimilarityField], mode: str | None = None) -> WinnerMap:
    """Per point, the trajectory with the highest defined value; ties go to the smaller id."""
    if not fields:
        raise ValidationError("winner map needs at least one trajectory")
    ids = sorted(fields)
    roi = fields[ids[0]].roi
    for t in ids[1:]:
        check_same_roi(roi, fields[t].roi)
    mode = mode or fields[ids[0]].mode
    winners: list[str | None] = []
    best_values = np.full(roi.n_points, np.nan)
    for s in range(roi.n_points):
        best_id, best = None, -np.inf
        for t in ids:
            v = fields[t].values[s]
            if not np.isnan(v) and v > best:
                best_id, best = t, v
        winners.append(best_id)
        if best_id is not None:
            best_values[s] = best
    return WinnerMap(roi, mode, tuple(winners), best_values)


def score_frame(rows: Sequence[ScoreRow]) -> pd.DataFrame:
    return pd.DataFrame(
        {name: [r.score(name) for r in rows] for name in SCORE_NAMES},
        index=[r.trajectory_id for r in rows],
    )


def score_correlations(rows: Sequence[ScoreRow], method: str = "pearson") -> pd.DataFrame:
    """Correlation between score columns across trajectories.

    Constant columns get NaN rows and columns, including the diagonal.
    """
    if len(rows) < 3:
        raise ValidationError("score correlations need at least three trajectories")
    frame = score_frame(rows)
    if method == "spearman":
        frame = frame.rank(method="average")
    elif method != "pearson":
        raise DomainError(f"unknown correlation method {method!r}")
    x = frame.to_numpy(dtype=float)
    centred = x - x.mean(axis=0)
    norms = np.sqrt((centred * centred).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = centred / np.where(norms > 0, norms, np.nan)
    corr = unit.T @ unit
    ok = norms > 0
    corr[np.ix_(ok, ok)] = np.clip(corr[np.ix_(ok, ok)], -1.0, 1.0)
    np.fill_diagonal(corr, np.where(ok, 1.0, np.nan))
    return pd.DataFrame(corr, index=list(SCORE_NAMES), columns=list(SCORE_NAMES))


def top_quantile_indicators(
    daily_fields: Mapping[str, SimilarityField],
    top_n: int = 8,
    quantiles: Sequence[float] = (0.25, 0.10, 0.05),
) -> pd.DataFrame:
    """Daily-overlap quantiles and minimum per trajectory, flagged 1 when in the top ``top_n``."""
    ids = list(daily_fields)
    stats = {}
    for q in quantiles:
        stats[f"Q{round(q * 100):02d}"] = [
            float(np.nanquantile(daily_fields[t].values, q)) for t in ids
        ]
    stats["min"] = [float(np.nanmin(daily_fields[t].values)) for t in ids]
    frame = pd.DataFrame(stats, index=ids)
    flags = pd.DataFrame(index=ids)
    for col in frame.columns:
        # Rank descending; ties broken by trajectory id for determinism.
        order = sorted(ids, key=lambda t: (-frame.at[t, col], t))
        top = set(order[:top_n])
        flags[f"top_{col}"] = [int(t in top) for t in ids]
    return pd.concat([frame, flags], axis=1)
