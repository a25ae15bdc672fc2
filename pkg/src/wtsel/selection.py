"""Threshold filtering of candidate trajectories, stage by stage."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import DEFAULT_CONDITIONING, ValidationError, WeatherType, parse_wt_list
from .frequencies import DEFAULT_MIN_SUPPORT
from .similarity import ALL, SimilarityField, SubsetStrategy, check_same_roi

DAILY_STAGE = "daily"


def default_limit(n_points: int) -> int:
    return math.ceil(n_points / 3)


@dataclass(frozen=True)
class FilterConfig:
    """A trajectory survives a stage while fewer than ``limit`` points score <= ``t_sim``.

    ``limit`` None resolves to ceil(N_S / 3) when the ROI size is known.
    """

    t_sim: float = 0.8
    limit: int | None = None
    conditioning_set: tuple[WeatherType, ...] = DEFAULT_CONDITIONING
    metric: str = "overlap"
    strategy: SubsetStrategy = ALL
    min_support: int = DEFAULT_MIN_SUPPORT

    def __post_init__(self) -> None:
        if not 0 < self.t_sim < 1:
            raise ValidationError(f"t_sim must be in (0, 1), got {self.t_sim}")
        object.__setattr__(self, "conditioning_set", parse_wt_list(self.conditioning_set))
        if self.limit is not None and self.limit < 1:
            raise ValidationError(f"limit must be >= 1, got {self.limit}")
        if self.min_support < 0:
            raise ValidationError("min_support must be non-negative")

    def resolved_limit(self, n_points: int) -> int:
        limit = default_limit(n_points) if self.limit is None else self.limit
        if not 1 <= limit <= n_points:
            raise ValidationError(f"limit {limit} outside 1..{n_points}")
        return limit

    @property
    def stages(self) -> tuple[str, ...]:
        return (DAILY_STAGE,) + tuple(wt.name for wt in self.conditioning_set)


@dataclass(frozen=True)
class FilterOutcome:
    trajectory_id: str
    stages: tuple[str, ...]
    counts: tuple[int | None, ...]
    retained: bool
    eliminated_at: str | None
    limit: int = field(default=10, compare=False)

    def count(self, stage: str) -> int | None:
        return self.counts[self.stages.index(stage)]


def count_below(field: SimilarityField, t_sim: float) -> int:
    """Points at or below ``t_sim``; undefined points count as below."""
    values = field.values
    return int(np.count_nonzero(np.isnan(values) | (values <= t_sim)))


def filter_trajectory(
    daily: SimilarityField,
    conditionals: Mapping[WeatherType, SimilarityField] | Sequence[SimilarityField],
    config: FilterConfig,
    trajectory_id: str = "",
) -> FilterOutcome:
    if not isinstance(conditionals, Mapping):
        conditionals = {f.conditioning_wt: f for f in conditionals}
    missing = [wt.name for wt in config.conditioning_set if wt not in conditionals]
    if missing:
        raise ValidationError(f"missing conditional similarity fields for {missing}")
    limit = config.resolved_limit(daily.roi.n_points)
    ordered = [daily] + [conditionals[wt] for wt in config.conditioning_set]
    counts: list[int | None] = [None] * len(ordered)
    eliminated_at = None
    for k, (stage, fld) in enumerate(zip(config.stages, ordered)):
        check_same_roi(daily.roi, fld.roi)
        counts[k] = count_below(fld, config.t_sim)
        if counts[k] >= limit:
            eliminated_at = stage
            break
    return FilterOutcome(
        trajectory_id, config.stages, tuple(counts), eliminated_at is None, eliminated_at, limit
    )


def sequential_filter(
    ensemble: Mapping[str, tuple[SimilarityField, Mapping[WeatherType, SimilarityField]]],
    config: FilterConfig,
) -> list[FilterOutcome]:
    """Filter every trajectory; output order follows the mapping's order."""
    if not ensemble:
        raise ValidationError("no trajectories to filter")
    outcomes = []
    for traj_id, (daily, conds) in ensemble.items():
        try:
            outcomes.append(filter_trajectory(daily, conds, config, traj_id))
        except ValidationError as exc:
            raise ValidationError(f"trajectory {traj_id!r}: {exc}") from None
    return outcomes
