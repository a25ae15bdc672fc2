"""Similarity between categorical distributions, per point and per region.

All four measures operate on the last axis, so they accept a single vector
or a stack of vectors (e.g. one per grid point).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import N_WT, DomainError, RegionOfInterest, ValidationError, WeatherType, parse_wt
from .frequencies import (
    DEFAULT_MIN_SUPPORT,
    JointFrequencyField,
    conditional,
    count_distributions,
    marginal_current,
)

METRICS = ("overlap", "dissimilarity", "bhattacharyya", "hellinger")
DAILY = "daily"
HELLINGER_CLAMP = 1e-12


def _pair(p1, p2) -> tuple[np.ndarray, np.ndarray]:
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape[-1:] != p2.shape[-1:]:
        raise DomainError(f"distribution lengths differ: {p1.shape[-1:]} vs {p2.shape[-1:]}")
    if np.any(p1 < 0) or np.any(p2 < 0):
        raise DomainError("distributions must be non-negative")
    return p1, p2


def overlap(p1, p2):
    p1, p2 = _pair(p1, p2)
    return np.minimum(p1, p2).sum(axis=-1)


def dissimilarity(p1, p2):
    p1, p2 = _pair(p1, p2)
    return 0.5 * np.abs(p1 - p2).sum(axis=-1)


def bhattacharyya(p1, p2):
    p1, p2 = _pair(p1, p2)
    return np.sqrt(p1 * p2).sum(axis=-1)


def hellinger(p1, p2):
    radicand = 1.0 - bhattacharyya(p1, p2)
    if np.any(radicand < -HELLINGER_CLAMP):
        raise DomainError(f"Bhattacharyya coefficient exceeds 1: {float(1.0 - np.min(radicand))!r}")
    return np.sqrt(np.maximum(radicand, 0.0))


_METRIC_FUNCS = {
    "overlap": overlap,
    "dissimilarity": dissimilarity,
    "bhattacharyya": bhattacharyya,
    "hellinger": hellinger,
}


def metric_function(name: str):
    try:
        return _METRIC_FUNCS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown metric {name!r}; expected one of {METRICS}") from None


@dataclass(frozen=True)
class SubsetStrategy:
    """Which categories enter a comparison, chosen from the reference vector.

    kind is one of ``all``, ``top`` (k most frequent), ``cum`` (smallest
    high-frequency prefix reaching a mass fraction) or ``minrf`` (strictly
    above a threshold).
    """

    kind: str = "all"
    param: float | None = None

    def __post_init__(self) -> None:
        kind, p = self.kind, self.param
        if kind == "all":
            if p is not None:
                raise DomainError("'all' strategy takes no parameter")
        elif kind == "top":
            if p is None or int(p) != p or not 1 <= p <= N_WT:
                raise DomainError(f"top-k needs integer k in 1..{N_WT}, got {p}")
        elif kind == "cum":
            if p is None or not 0 < p <= 1:
                raise DomainError(f"cumulative fraction must be in (0, 1], got {p}")
        elif kind == "minrf":
            if p is None or not 0 <= p < 1:
                raise DomainError(f"minimum rf must be in [0, 1), got {p}")
        else:
            raise DomainError(f"unknown subset strategy {kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "all":
            return "all"
        if self.kind == "top":
            return f"top{int(self.param)}"
        if self.kind == "cum":
            return f"cum{self.param * 100:g}"
        return f"minrf:{self.param:g}"

    @classmethod
    def parse(cls, text: str) -> SubsetStrategy:
        text = text.strip().lower()
        if text == "all":
            return cls()
        if m := re.fullmatch(r"top(\d+)", text):
            return cls("top", int(m.group(1)))
        if m := re.fullmatch(r"cum(\d+(?:\.\d+)?)", text):
            return cls("cum", float(m.group(1)) / 100.0)
        if m := re.fullmatch(r"minrf:(\d*\.?\d+)", text):
            return cls("minrf", float(m.group(1)))
        raise DomainError(f"cannot parse subset strategy {text!r}")

    def __str__(self) -> str:
        return self.label


ALL = SubsetStrategy()
D_OPT_OPTIONS: tuple[SubsetStrategy, ...] = (
    SubsetStrategy("top", 12),
    SubsetStrategy("top", 9),
    SubsetStrategy("cum", 0.9),
    SubsetStrategy("cum", 0.7),
    SubsetStrategy("minrf", 0.05),
)


def subset_mask(p_ref, strategy: SubsetStrategy) -> np.ndarray:
    """Boolean selection over the last axis of ``p_ref``."""
    p_ref = np.asarray(p_ref, dtype=float)
    if strategy.kind == "all":
        return np.ones(p_ref.shape, dtype=bool)
    if strategy.kind == "minrf":
        mask = p_ref > strategy.param
        if np.any(~mask.any(axis=-1)):
            raise DomainError(f"empty subset: no category above {strategy.param:g}")
        return mask
    # Descending frequency, ties to the lower index.
    order = np.argsort(-p_ref, axis=-1, kind="stable")
    if strategy.kind == "top":
        n_keep = np.full(p_ref.shape[:-1], int(strategy.param))
    else:
        sorted_mass = np.cumsum(np.take_along_axis(p_ref, order, axis=-1), axis=-1)
        reached = sorted_mass >= strategy.param - 1e-12
        n_keep = np.where(reached.any(axis=-1), reached.argmax(axis=-1) + 1, p_ref.shape[-1])
    rank_keep = np.arange(p_ref.shape[-1]) < np.asarray(n_keep)[..., None]
    mask = np.zeros(p_ref.shape, dtype=bool)
    np.put_along_axis(mask, order, rank_keep, axis=-1)
    return mask


def apply_subset(p_ref, p_model, strategy: SubsetStrategy):
    """Restrict both vectors to the categories chosen from ``p_ref``.

    Returns ``(ref_restricted, model_restricted, indices)`` with zero-based
    ``indices`` ascending. No renormalisation is applied.
    """
    p_ref, p_model = _pair(p_ref, p_model)
    if p_ref.ndim != 1:
        raise DomainError("apply_subset works on single vectors; use subset_mask for stacks")
    idx = np.flatnonzero(subset_mask(p_ref, strategy))
    return p_ref[idx], p_model[idx], idx


def _mode_label(mode) -> str:
    if mode is None or (isinstance(mode, str) and mode.lower() == DAILY):
        return DAILY
    return f"cond:{parse_wt(mode).name}"


def parse_mode(text) -> WeatherType | None:
    """``"daily"`` -> None, ``"cond:PA"`` / ``"PA"`` -> WeatherType.PA."""
    if text is None or isinstance(text, WeatherType):
        return text
    text = str(text).strip()
    if text.lower() == DAILY:
        return None
    if text.lower().startswith("cond:"):
        text = text[5:]
    return parse_wt(text)


@dataclass(frozen=True, eq=False)
class SimilarityField:
    roi: RegionOfInterest
    metric: str
    mode: str
    strategy: SubsetStrategy
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(self.roi.n_points)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mode", _mode_label(parse_mode(self.mode)))

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def conditioning_wt(self) -> WeatherType | None:
        return parse_mode(self.mode)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimilarityField):
            return NotImplemented
        return (
            self.roi == other.roi
            and self.metric == other.metric
            and self.mode == other.mode
            and self.strategy == other.strategy
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def check_same_roi(a: RegionOfInterest, b: RegionOfInterest) -> None:
    if a == b:
        return
    only_a = [p for p in a.points if p not in b.points]
    only_b = [p for p in b.points if p not in a.points]
    raise ValidationError(
        f"ROI mismatch: only in first {only_a}, only in second {only_b}"
        + ("" if only_a or only_b else " (same points, different order)")
    )


def distributions(
    joint: JointFrequencyField, mode=None, min_support: int = DEFAULT_MIN_SUPPORT
) -> np.ndarray:
    """Per-point distributions for a mode, NaN rows where undefined."""
    wt = parse_mode(mode)
    if wt is None:
        return marginal_current(joint).rf_daily
    return conditional(joint, wt, min_support).rf_cond


def similarity_values(p_ref: np.ndarray, p_model: np.ndarray, metric: str, strategy: SubsetStrategy):
    """Metric per row, NaN wherever either row is undefined."""
    func = metric_function(metric)
    p_ref = np.asarray(p_ref, dtype=float)
    p_model = np.asarray(p_model, dtype=float)
    ok = ~(np.isnan(p_ref).any(axis=-1) | np.isnan(p_model).any(axis=-1))
    out = np.full(p_ref.shape[:-1], np.nan)
    if ok.any():
        ref, mod = p_ref[ok], p_model[ok]
        mask = subset_mask(ref, strategy)
        out[ok] = func(np.where(mask, ref, 0.0), np.where(mask, mod, 0.0))
    return out


def exact_overlap(ref_counts, model_counts, strategy: SubsetStrategy = ALL) -> np.ndarray:
    """Overlap of count-backed distributions in integer arithmetic.

    Each argument is a ``(numerators, denominators, defined)`` triple from
    :func:`count_distributions`. The only rounding is the final division, so
    identical distributions give exactly 1.0.
    """
    a, A, ok_a = ref_counts
    b, B, ok_b = model_counts
    ok = ok_a & ok_b
    out = np.full(ok.shape, np.nan)
    if not ok.any():
        return out
    a, b = a[ok].astype(np.int64), b[ok].astype(np.int64)
    A, B = A[ok].astype(np.int64), B[ok].astype(np.int64)
    mask = subset_mask(a / A[..., None], strategy)
    num = np.where(mask, np.minimum(a * B[..., None], b * A[..., None]), 0).sum(axis=-1)
    out[ok] = num / (A * B)
    return out


def similarity_field(
    ref_freqs: JointFrequencyField,
    model_freqs: JointFrequencyField,
    metric: str = "overlap",
    mode=None,
    strategy: SubsetStrategy = ALL,
    min_support: int = DEFAULT_MIN_SUPPORT,
) -> SimilarityField:
    check_same_roi(ref_freqs.roi, model_freqs.roi)
    metric = metric.lower()
    metric_function(metric)
    wt = parse_mode(mode)
    exact = metric == "overlap" and ref_freqs.counts is not None and model_freqs.counts is not None
    try:
        if exact:
            values = exact_overlap(
                count_distributions(ref_freqs, wt, min_support),
                count_distributions(model_freqs, wt, min_support),
                strategy,
            )
        else:
            p_ref = distributions(ref_freqs, wt, min_support)
            p_model = distributions(model_freqs, wt, min_support)
            values = similarity_values(p_ref, p_model, metric, strategy)
    except DomainError as exc:
        raise DomainError(f"{exc} (mode {_mode_label(parse_mode(mode))})") from None
    return SimilarityField(ref_freqs.roi, metric, _mode_label(parse_mode(mode)), strategy, values)


def as_similarity(values, metric: str) -> np.ndarray:
    """Orient a metric so larger means more similar (1 - distance for distances)."""
    values = np.asarray(values, dtype=float)
    return 1.0 - values if metric in ("hellinger", "dissimilarity") else values


def d_opt(option_values: Sequence[float], reference_values: Sequence[float]) -> float:
    """Summed deviation of an option from the reference, in reference standard deviations."""
    y = np.asarray(option_values, dtype=float)
    x = np.asarray(reference_values, dtype=float)
    if y.shape != x.shape:
        raise DomainError(f"value arrays differ in shape: {y.shape} vs {x.shape}")
    y_ok, x_ok = ~np.isnan(y), ~np.isnan(x)
    if not np.array_equal(y_ok, x_ok):
        raise DomainError("option and reference are defined on different points")
    if x_ok.sum() < 2:
        raise DomainError("d_opt needs at least two defined points")
    sigma = np.std(x[x_ok], ddof=1)
    if sigma == 0:
        raise DomainError("reference values are constant; d_opt undefined")
    return float(np.sum(y[y_ok] - x[x_ok]) / sigma)
