"""Synthetic weather-type series from first-order Markov chains.

Random numbers come from numpy's PCG64 generator. Point ``s`` of a spec with
seed ``k`` draws from ``default_rng(SeedSequence([k, s]))``: one uniform per
calendar day, consumed in date order and mapped through the inverse CDF
``count(cdf <= u)`` of the relevant row. The same (spec, window) therefore
always produces the same series, whatever order points are processed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_WT_STAR,
    N_WT,
    DomainError,
    RegionOfInterest,
    SeasonWindow,
    ValidationError,
    WtSeries,
    parse_wt,
)
from .frequencies import transition_pairs

ROW_TOL = 1e-12
PERTURB_KINDS = ("persistence_inflation", "row_jitter")


def _normalise_rows(m: np.ndarray) -> np.ndarray:
    return m / m.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class MarkovSpec:
    """Per-point chains. ``transition[s, j, i]`` = P(today = i | yesterday = j)."""

    roi: RegionOfInterest
    transition: np.ndarray
    initial: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        n = self.roi.n_points
        t = np.asarray(self.transition, dtype=float)
        p0 = np.asarray(self.initial, dtype=float)
        if t.shape != (n, N_WT, N_WT):
            raise ValidationError(f"transition shape {t.shape}, expected {(n, N_WT, N_WT)}")
        if p0.shape != (n, N_WT):
            raise ValidationError(f"initial shape {p0.shape}, expected {(n, N_WT)}")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValidationError("transition probabilities must be finite and non-negative")
        bad = np.argwhere(np.abs(t.sum(axis=2) - 1.0) > ROW_TOL)
        if bad.size:
            s, j = bad[0]
            raise ValidationError(
                f"transition row {j + 1} at point {self.roi.points[s]} sums to {float(t[s, j].sum())!r}"
            )
        if np.any(p0 < 0) or np.any(np.abs(p0.sum(axis=1) - 1.0) > ROW_TOL):
            raise ValidationError("initial distributions must be non-negative and sum to 1")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "initial", p0)
        object.__setattr__(self, "seed", int(self.seed))

    def with_seed(self, seed: int) -> MarkovSpec:
        return MarkovSpec(self.roi, self.transition, self.initial, seed)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarkovSpec):
            return NotImplemented
        return (
            self.roi == other.roi
            and self.seed == other.seed
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.initial, other.initial)
        )


def stationary_distribution(transition: np.ndarray, n_steps: int = 2000) -> np.ndarray:
    """Cesaro average of ``uniform @ T^k`` for k < n_steps, per point.

    Averaging makes the result well defined for periodic chains as well.
    """
    t = np.asarray(transition, dtype=float)
    squeeze = t.ndim == 2
    t = t[None] if squeeze else t
    p = np.full(t.shape[:2], 1.0 / t.shape[1])
    acc = np.zeros_like(p)
    for _ in range(n_steps):
        acc += p
        p = np.einsum("sj,sji->si", p, t)
    out = _normalise_rows(acc)
    return out[0] if squeeze else out


def uniform_spec(roi: RegionOfInterest, seed: int = 0) -> MarkovSpec:
    n = roi.n_points
    return MarkovSpec(
        roi, np.full((n, N_WT, N_WT), 1.0 / N_WT), np.full((n, N_WT), 1.0 / N_WT), seed
    )


def random_spec(
    roi: RegionOfInterest,
    seed: int = 0,
    persistence: float = 0.35,
    concentration: float = 8.0,
    spatial_mix: float = 0.5,
    dominant=DEFAULT_WT_STAR,
    dominant_mass: float = 0.6,
) -> MarkovSpec:
    """A spatially varying chain with uneven type frequencies and some persistence.

    Two corner chains are drawn from Dirichlet rows centred on a skewed
    climatology in which the ``dominant`` types share ``dominant_mass``; each
    point blends the corners by its position inside the ROI and then adds
    ``persistence`` weight on the diagonal.
    """
    if not 0 <= persistence < 1 or not 0 <= spatial_mix <= 1 or not 0 <= dominant_mass < 1:
        raise DomainError("persistence and dominant_mass must be in [0, 1), spatial_mix in [0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7919]))
    climatology = rng.dirichlet(np.full(N_WT, 1.5))
    # Keep every type reachable so conditionals are estimable.
    climatology = _normalise_rows(climatology + 0.5 / N_WT)
    if dominant:
        boost = np.zeros(N_WT)
        boost[[parse_wt(w).position for w in dominant]] = 1.0
        climatology = (1 - dominant_mass) * climatology + dominant_mass * boost / boost.sum()
    corners = rng.dirichlet(concentration * N_WT * climatology, size=(2, N_WT))
    pts = np.asarray(roi.points, dtype=float)
    span = np.ptp(pts, axis=0)
    rel = (pts - pts.min(axis=0)) / np.where(span > 0, span, 1.0)
    weight = spatial_mix * rel.mean(axis=1)
    base = (1 - weight)[:, None, None] * corners[0] + weight[:, None, None] * corners[1]
    t = _normalise_rows((1 - persistence) * base + persistence * np.eye(N_WT))
    return MarkovSpec(roi, t, stationary_distribution(t), seed)


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # Zero-probability states never satisfy cdf_k <= u < cdf_{k+1}, so they are never drawn.
    return np.count_nonzero(cdf <= u[:, None], axis=1)


def simulate(spec: MarkovSpec, window: SeasonWindow, trajectory_id: str | None = None) -> WtSeries:
    """Simulate every in-window day; each season-year block restarts from ``initial``."""
    dates = window.dates()
    if dates.size == 0:
        raise ValidationError(f"window {window.describe()} contains no days")
    n_points = spec.roi.n_points
    uniforms = np.empty((dates.size, n_points))
    for s in range(n_points):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, s]))
        uniforms[:, s] = rng.random(dates.size)

    cdf_t = np.cumsum(spec.transition, axis=2)
    cdf_t /= cdf_t[:, :, -1:]
    cdf_0 = np.cumsum(spec.initial, axis=1)
    cdf_0 /= cdf_0[:, -1:]
    continues = np.concatenate([[False], transition_pairs(dates)])

    states = np.empty((dates.size, n_points), dtype=np.int64)
    rows = np.arange(n_points)
    state = _inverse_cdf(cdf_0, uniforms[0])
    states[0] = state
    for d in range(1, dates.size):
        cdf = cdf_t[rows, state] if continues[d] else cdf_0
        state = _inverse_cdf(cdf, uniforms[d])
        states[d] = state
    tid = trajectory_id if trajectory_id is not None else f"synthetic_seed{spec.seed}"
    return WtSeries(tid, spec.roi.points, dates, states + 1)


def perturb(spec: MarkovSpec, delta: float, kind: str = "row_jitter", seed: int = 0) -> MarkovSpec:
    """Convex mixture of each transition row with a perturbing distribution.

    ``persistence_inflation`` mixes row ``j`` with the point mass on ``j``;
    ``row_jitter`` mixes every row with its own Dirichlet(1) draw.
    """
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must be in [0, 1], got {delta}")
    if kind not in PERTURB_KINDS:
        raise DomainError(f"unknown perturbation kind {kind!r}; expected one of {PERTURB_KINDS}")
    if delta == 0:
        return spec
    if kind == "persistence_inflation":
        other = np.broadcast_to(np.eye(N_WT), spec.transition.shape)
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 104729]))
        other = rng.dirichlet(np.ones(N_WT), size=spec.transition.shape[:2])
    t = (1.0 - delta) * spec.transition + delta * other
    return MarkovSpec(spec.roi, _normalise_rows(t), spec.initial, spec.seed)
