import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wtsel.core import DEFAULT_CONDITIONING, RegionOfInterest, ValidationError, WeatherType, default_roi
from wtsel.selection import (
    FilterConfig,
    count_below,
    default_limit,
    filter_trajectory,
    sequential_filter,
)
from wtsel.similarity import ALL, SimilarityField

ROI = default_roi()
PA, PC, PDNE, U = WeatherType.PA, WeatherType.PC, WeatherType.PDNE, WeatherType.U


def field(values, mode="daily"):
    return SimilarityField(ROI, "overlap", mode, ALL, np.asarray(values, dtype=float))


def planted(n_below, below=0.75, above=0.9, mode="daily"):
    v = np.full(ROI.n_points, above)
    v[:n_below] = below
    return field(v, mode)


def ones_conditionals(conditioning=DEFAULT_CONDITIONING):
    return {wt: field(np.ones(30), wt.name) for wt in conditioning}


class TestCountBelow:
    def test_all_ones(self):
        assert count_below(field(np.ones(30)), 0.8) == 0

    def test_planted_seven(self):
        assert count_below(planted(7), 0.8) == 7

    def test_boundary_inclusive(self):
        v = np.ones(30)
        v[3] = 0.8
        assert count_below(field(v), 0.8) == 1

    def test_undefined_counts_as_below(self):
        v = np.ones(30)
        v[:2] = np.nan
        assert count_below(field(v), 0.8) == 2


class TestFilterConfig:
    def test_defaults(self):
        c = FilterConfig()
        assert c.t_sim == 0.8 and c.resolved_limit(30) == 10 == default_limit(30)
        assert c.conditioning_set == (PA, PC, PDNE, U)
        assert c.stages == ("daily", "PA", "PC", "PDNE", "U")

    @pytest.mark.parametrize("kwargs", [{"t_sim": 0}, {"t_sim": 1}, {"limit": 0}, {"conditioning_set": ()},
                                        {"conditioning_set": (PA, PA)}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            FilterConfig(**kwargs)

    def test_limit_above_points(self):
        with pytest.raises(ValidationError):
            FilterConfig(limit=31).resolved_limit(30)


class TestFilterTrajectory:
    def test_all_ones_retained(self):
        out = filter_trajectory(field(np.ones(30)), ones_conditionals(), FilterConfig(), "t")
        assert out.retained and out.eliminated_at is None
        assert out.counts == (0, 0, 0, 0, 0)

    def test_daily_elimination_leaves_rest_blank(self):
        out = filter_trajectory(planted(28), ones_conditionals(), FilterConfig(), "inm_cm5")
        assert not out.retained and out.eliminated_at == "daily"
        assert out.counts == (28, None, None, None, None)

    def test_two_stage_row_retained(self):
        conds = {PC: planted(4, mode="PC"), PDNE: planted(0, mode="PDNE")}
        cfg = FilterConfig(conditioning_set=(PC, PDNE))
        out = filter_trajectory(planted(0), conds, cfg, "ec_earth3_aerchem")
        assert out.retained and out.counts == (0, 4, 0)

    def test_first_failing_stage_reported(self):
        conds = ones_conditionals()
        conds[PC] = planted(12, mode="PC")
        conds[U] = planted(20, mode="U")
        out = filter_trajectory(planted(7), conds, FilterConfig(), "access_cm2")
        assert out.eliminated_at == "PC"
        assert out.counts == (7, 0, 12, None, None)
        assert out.count("PC") == 12

    def test_missing_conditional(self):
        conds = ones_conditionals()
        del conds[U]
        with pytest.raises(ValidationError, match="U"):
            filter_trajectory(field(np.ones(30)), conds, FilterConfig())

    def test_sequence_of_fields_accepted(self):
        out = filter_trajectory(field(np.ones(30)), list(ones_conditionals().values()), FilterConfig())
        assert out.retained


class TestSequentialFilter:
    def test_planted_counts(self):
        ens = {f"t{n}": (planted(n), ones_conditionals()) for n in (0, 9, 10, 30)}
        out = sequential_filter(ens, FilterConfig(limit=10))
        assert [o.retained for o in out] == [True, True, False, False]
        assert [o.trajectory_id for o in out] == ["t0", "t9", "t10", "t30"]

    def test_identical_ensemble_all_retained(self):
        ens = {f"t{k}": (field(np.ones(30)), ones_conditionals()) for k in range(5)}
        assert all(o.retained for o in sequential_filter(ens, FilterConfig()))

    def test_empty(self):
        with pytest.raises(ValidationError):
            sequential_filter({}, FilterConfig())

    def test_error_names_trajectory(self):
        ens = {"bad": (field(np.ones(30)), {})}
        with pytest.raises(ValidationError, match="bad"):
            sequential_filter(ens, FilterConfig())

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        ens = {
            f"t{k}": (field(rng.uniform(0.6, 1, 30)), {wt: field(rng.uniform(0.6, 1, 30), wt.name) for wt in DEFAULT_CONDITIONING})
            for k in range(6)
        }
        assert sequential_filter(ens, FilterConfig()) == sequential_filter(ens, FilterConfig())


def random_ensemble(seed, n=6):
    rng = np.random.default_rng(seed)
    ens = {}
    for k in range(n):
        daily = field(np.round(rng.uniform(0.6, 1.0, 30), 2))
        conds = {wt: field(np.round(rng.uniform(0.6, 1.0, 30), 2), wt.name) for wt in DEFAULT_CONDITIONING}
        ens[f"t{k}"] = (daily, conds)
    return ens


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    t_lo=st.floats(0.6, 0.95),
    dt=st.floats(0, 0.04),
    limit=st.integers(1, 29),
    perm=st.permutations(list(DEFAULT_CONDITIONING)),
)
def test_monotonicity_and_order_independence(seed, t_lo, dt, limit, perm):
    ens = random_ensemble(seed)
    base = {o.trajectory_id for o in sequential_filter(ens, FilterConfig(t_lo, limit)) if o.retained}
    higher_t = {o.trajectory_id for o in sequential_filter(ens, FilterConfig(t_lo + dt, limit)) if o.retained}
    larger_limit = {o.trajectory_id for o in sequential_filter(ens, FilterConfig(t_lo, limit + 1)) if o.retained}
    reordered = {
        o.trajectory_id
        for o in sequential_filter(ens, FilterConfig(t_lo, limit, conditioning_set=tuple(perm)))
        if o.retained
    }
    assert higher_t <= base
    assert base <= larger_limit
    assert reordered == base
    for daily, _ in ens.values():
        assert count_below(daily, t_lo) <= count_below(daily, t_lo + dt)
