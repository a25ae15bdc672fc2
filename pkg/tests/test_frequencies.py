import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import one_point_series
from wtsel.core import N_WT, SeasonWindow, ValidationError, WeatherType, WtSeries
from wtsel.frequencies import (
    JointFrequencyField,
    build_joint,
    conditional,
    conditional_all,
    count_blocks,
    marginal_current,
    marginal_previous,
    persistence,
    transition_pairs,
)
from wtsel.synth import MarkovSpec, simulate

PA, PC = WeatherType.PA.position, WeatherType.PC.position


class TestBuildJoint:
    def test_four_day_example(self):
        joint = build_joint(one_point_series(["PA", "PA", "PC", "PA"]))
        rf = joint.rf[0]
        assert joint.pair_count[0] == 3
        assert rf[PA, PA] == rf[PC, PA] == rf[PA, PC] == pytest.approx(1 / 3)
        assert np.count_nonzero(rf) == 3

    def test_constant_series(self):
        joint = build_joint(one_point_series(["PDW"] * 9))
        k = WeatherType.PDW.position
        assert joint.rf[0, k, k] == 1.0 and joint.rf.sum() == 1.0

    def test_two_year_blocks(self):
        w = SeasonWindow(first_year=2000, last_year=2001)
        dates = w.dates()
        s = WtSeries("x", ((0.0, 0.0),), dates, np.ones((dates.size, 1), dtype=int))
        assert dates.size == 244
        assert build_joint(s).pair_count[0] == 242
        assert count_blocks(dates) == 2

    def test_default_window_pairs(self, ref_joint):
        assert np.all(ref_joint.pair_count == 3267)

    def test_gaps_break_pairs(self):
        d = np.array(["2000-06-01", "2000-06-02", "2000-06-04", "2000-06-05"], dtype="datetime64[D]")
        assert transition_pairs(d).tolist() == [True, False, True]
        d = np.array(["2000-12-31", "2001-01-01"], dtype="datetime64[D]")
        assert transition_pairs(d).tolist() == [False]

    def test_no_pairs(self):
        with pytest.raises(ValidationError, match="no consecutive-day pairs"):
            build_joint(one_point_series(["PA"]))

    def test_window_and_roi_selection(self, ref_series, roi):
        sub_roi = type(roi)(roi.points[:3])
        j = build_joint(ref_series, SeasonWindow(months={7}), sub_roi)
        assert j.roi == sub_roi
        assert np.all(j.pair_count == 27 * 30)

    def test_rejects_bad_rf(self, roi):
        with pytest.raises(ValidationError):
            JointFrequencyField(roi, np.zeros((2, N_WT, N_WT)), np.ones(2))
        bad = np.zeros((1, N_WT, N_WT))
        bad[0, 0, 0] = 0.98
        f = JointFrequencyField(type(roi)(((0, 0),)), bad, [1])
        with pytest.raises(ValidationError, match="sums to 0.98"):
            f.check_sums()


def _dates_for(blocks):
    out = []
    for year, length in blocks:
        start = dt.date(year, 6, 1)
        out.extend(start + dt.timedelta(days=k) for k in range(length))
    return out


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.integers(2000, 2003), st.integers(1, 12)), min_size=1, max_size=3, unique_by=lambda t: t[0]),
    st.data(),
)
def test_oracle_equivalence_with_blocks(blocks, data):
    blocks = sorted(blocks)
    dates = _dates_for(blocks)
    vals = data.draw(st.lists(st.sampled_from([1, 10, 18]), min_size=len(dates), max_size=len(dates)))
    expected = oracles.joint_counts(vals, dates)
    n_pairs = sum(expected.values())
    series = WtSeries("h", ((0.0, 0.0),), np.array(dates, dtype="datetime64[D]"), np.array(vals)[:, None])
    if n_pairs == 0:
        with pytest.raises(ValidationError):
            build_joint(series)
        return
    joint = build_joint(series)
    got = {(i + 1, j + 1): int(c) for (i, j), c in np.ndenumerate(joint.counts[0]) if c}
    assert got == expected
    assert joint.pair_count[0] == n_pairs


class TestMarginals:
    def test_four_day_example(self):
        joint = build_joint(one_point_series(["PA", "PA", "PC", "PA"]))
        cur, prev = marginal_current(joint), marginal_previous(joint)
        assert cur.rf_daily[0, PA] == pytest.approx(2 / 3) and cur.rf_daily[0, PC] == pytest.approx(1 / 3)
        assert prev.rf_daily[0, PA] == pytest.approx(2 / 3) and prev.rf_daily[0, PC] == pytest.approx(1 / 3)
        assert cur.axis_tag == "current" and prev.axis_tag == "previous"

    def test_one_hot(self, roi):
        rf = np.zeros((1, N_WT, N_WT))
        rf[0, 4, 4] = 1.0
        j = JointFrequencyField(type(roi)(((0, 0),)), rf, [10])
        assert np.array_equal(marginal_current(j).rf_daily[0], np.eye(N_WT)[4])

    def test_symmetric_joint(self, roi):
        rng = np.random.default_rng(0)
        m = rng.random((N_WT, N_WT))
        m = (m + m.T) / (m + m.T).sum()
        j = JointFrequencyField(type(roi)(((0, 0),)), m[None], [np.nan])
        assert np.allclose(marginal_current(j).rf_daily, marginal_previous(j).rf_daily, atol=1e-15)

    def test_closeness_bound(self, ref_series, ref_joint):
        blocks = count_blocks(ref_series.dates)
        P = ref_joint.pair_count[0]
        l1 = np.abs(marginal_current(ref_joint).rf_daily - marginal_previous(ref_joint).rf_daily).sum(axis=1)
        assert np.all(l1 <= 2 * blocks / P + 1e-12)


class TestConditional:
    def test_four_day_example(self):
        joint = build_joint(one_point_series(["PA", "PA", "PC", "PA"]))
        c = conditional(joint, "PA", min_support=1)
        assert c.defined[0] and c.support[0] == 2
        assert c.rf_cond[0, PA] == 0.5 and c.rf_cond[0, PC] == 0.5

    def test_never_occurs(self):
        joint = build_joint(one_point_series(["PA", "PA", "PC", "PA"]))
        c = conditional(joint, "U", min_support=0)
        assert not c.defined.any() and np.isnan(c.rf_cond).all()

    def test_cycle(self):
        joint = build_joint(one_point_series(["PA", "PC"] * 20))
        c = conditional(joint, "PA", min_support=1)
        assert c.rf_cond[0, PC] == 1.0
        per = persistence(joint, min_support=1)
        assert per.per_rf[0, PA] == 0 and per.per_rf[0, PC] == 0

    def test_min_support_threshold(self):
        joint = build_joint(one_point_series(["PA"] * 31))
        assert conditional(joint, "PA", 30).defined[0]
        assert not conditional(joint, "PA", 31).defined[0]

    def test_constant_persistence(self):
        per = persistence(build_joint(one_point_series(["PA"] * 40)))
        assert per.per_rf[0, PA] == 1.0

    def test_persistence_is_conditional_diagonal(self, ref_joint):
        per = persistence(ref_joint)
        for wt in WeatherType:
            c = conditional(ref_joint, wt)
            k = wt.position
            both = per.defined[:, k] & c.defined
            assert np.array_equal(per.per_rf[both, k], c.rf_cond[both, k])
            assert np.array_equal(per.defined[:, k], c.defined)

    def test_rf_only_input_matches_counts(self, ref_joint):
        rf_only = JointFrequencyField(ref_joint.roi, ref_joint.rf, ref_joint.pair_count)
        a, _, da = conditional_all(ref_joint)
        b, _, db = conditional_all(rf_only)
        assert np.array_equal(da, db)
        assert np.allclose(a[da], b[db], atol=1e-12)


def test_conservation_and_consistency(ref_joint):
    rf = ref_joint.rf
    assert np.all(np.abs(rf.sum(axis=(1, 2)) - 1) <= 1e-9)
    integral = rf * ref_joint.pair_count[:, None, None]
    assert np.all(np.abs(integral - np.round(integral)) <= 1e-6)
    cur, prev = marginal_current(ref_joint).rf_daily, marginal_previous(ref_joint).rf_daily
    assert np.all(np.abs(cur.sum(axis=1) - 1) <= 1e-9)
    assert np.all(np.abs(prev.sum(axis=1) - 1) <= 1e-9)
    cond, _, defined = conditional_all(ref_joint)
    assert np.all(np.abs(cond[defined].sum(axis=1) - 1) <= 1e-9)
    s, j = np.nonzero(defined)
    recon = cond[s, j, :] * prev[s, j][:, None]
    assert np.max(np.abs(recon - rf[s, :, j])) <= 1e-12


def test_persistence_recovers_known_diagonal():
    """Long chain with diagonal q: estimate within three binomial sigmas."""
    from wtsel.core import RegionOfInterest

    roi = RegionOfInterest(((0.0, 40.0),))
    q = np.linspace(0.2, 0.8, 4)
    t = np.zeros((1, N_WT, N_WT))
    states = [WeatherType.PA, WeatherType.PDNE, WeatherType.PC, WeatherType.U]
    pos = [w.position for w in states]
    for k, p in enumerate(pos):
        t[0, p, p] = q[k]
        for other in pos:
            if other != p:
                t[0, p, other] = (1 - q[k]) / 3
    for p in range(N_WT):
        if p not in pos:
            t[0, p, pos[0]] = 1.0
    init = np.zeros((1, N_WT))
    init[0, pos] = 0.25
    series = simulate(MarkovSpec(roi, t, init, seed=5), SeasonWindow(first_year=1900, last_year=2010))
    joint = build_joint(series)
    per = persistence(joint)
    support = joint.counts[0].sum(axis=0)
    for k, p in enumerate(pos):
        n = support[p]
        assert abs(per.per_rf[0, p] - q[k]) <= 3 * math.sqrt(q[k] * (1 - q[k]) / n)
