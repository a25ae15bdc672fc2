import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import wt_index
from wtsel.core import (
    DEFAULT_ROI_LATS,
    DEFAULT_ROI_LONS,
    WT_CODES,
    DomainError,
    GridSpec,
    RegionOfInterest,
    SeasonWindow,
    ValidationError,
    WeatherType,
    WtSeries,
    code_to_index,
    default_roi,
    parse_wt,
    parse_wt_list,
    season_mask,
    wt_from_index,
)


def full_daily(first=1979, last=2005, n_points=1):
    dates = np.arange(np.datetime64(f"{first}-01-01"), np.datetime64(f"{last + 1}-01-01"))
    values = np.ones((dates.size, n_points), dtype=int)
    pts = tuple((float(k), 40.0) for k in range(n_points))
    return WtSeries("full", pts, dates, values)


class TestWeatherType:
    def test_anchor_indices(self):
        assert wt_from_index(1) is WeatherType.PA
        assert wt_from_index(10) is WeatherType.PDNE
        assert wt_from_index(18) is WeatherType.PC
        assert wt_from_index(27) is WeatherType.U

    @pytest.mark.parametrize("bad", [0, 28, -1, 2.5])
    def test_out_of_range(self, bad):
        with pytest.raises(DomainError):
            wt_from_index(bad)

    def test_order_matches_independent_table(self):
        assert len(WT_CODES) == 27
        for code in WT_CODES:
            assert code_to_index(code) == wt_index(code)

    @pytest.mark.parametrize("code", WT_CODES)
    def test_round_trip(self, code):
        assert wt_from_index(code_to_index(code)).code == code

    def test_parse_forms(self):
        assert parse_wt("pdne") is WeatherType.PDNE
        assert parse_wt("18") is WeatherType.PC
        assert parse_wt(np.int64(27)) is WeatherType.U
        assert WeatherType.PA.position == 0
        with pytest.raises(DomainError):
            parse_wt("XX")

    def test_parse_list(self):
        assert parse_wt_list("PA, PC") == (WeatherType.PA, WeatherType.PC)
        with pytest.raises(DomainError):
            parse_wt_list("PA,PA")
        with pytest.raises(DomainError):
            parse_wt_list("")


class TestGridAndRoi:
    def test_default_roi(self):
        roi = default_roi()
        assert roi.n_points == 30
        lons = {p[0] for p in roi.points}
        lats = {p[1] for p in roi.points}
        assert sorted(lons) == list(DEFAULT_ROI_LONS)
        assert sorted(lats) == list(DEFAULT_ROI_LATS)
        assert min(lats) == 35.0 and max(lats) == 45.0
        assert min(lons) == -8.75 and max(lons) == 3.75

    def test_duplicate_points_rejected(self):
        with pytest.raises(ValidationError):
            RegionOfInterest(((0.0, 40.0), (0.0, 40.0)))

    def test_grid_uniform_spacing(self):
        g = GridSpec.from_axes([0, 2.5, 5.0], [30, 32.5])
        assert g.shape == (2, 3)
        assert g.contains(2.5, 32.5)
        assert g.contains(2.5000000001, 32.5)
        with pytest.raises(ValidationError):
            GridSpec.from_axes([0, 2.5, 6.0], [30, 32.5])

    def test_roi_on_grid(self):
        g = GridSpec.from_axes(np.arange(-10, 6.25, 2.5), np.arange(30, 50, 2.5))
        RegionOfInterest.box([-5, -2.5], [35, 37.5]).check_on_grid(g)
        with pytest.raises(ValidationError):
            RegionOfInterest.box([-5.1], [35]).check_on_grid(g)


class TestSeasonWindow:
    def test_default_day_count(self):
        assert SeasonWindow().dates().size == 3294

    def test_full_series_masks_to_3294(self):
        masked = season_mask(full_daily(), SeasonWindow())
        assert masked.dates.size == 3294

    def test_one_year(self):
        assert SeasonWindow(first_year=1990, last_year=1990).dates().size == 122

    def test_june_only_is_idempotent(self):
        june = SeasonWindow(months={6})
        once = season_mask(full_daily(2000, 2001), june)
        assert season_mask(once, june) == once
        assert season_mask(once, SeasonWindow(first_year=2000, last_year=2001)) == once

    def test_empty_mask(self):
        s = full_daily(2000, 2000)
        with pytest.raises(ValidationError, match="no in-window data"):
            season_mask(s, SeasonWindow(first_year=1980, last_year=1981))

    def test_invalid(self):
        with pytest.raises(ValidationError):
            SeasonWindow(months=set())
        with pytest.raises(ValidationError):
            SeasonWindow(first_year=2001, last_year=2000)

    @settings(max_examples=40, deadline=None)
    @given(
        first=st.integers(1950, 2020),
        n_years=st.integers(1, 8),
        months=st.sets(st.sampled_from([3, 4, 5, 6, 7, 8, 9, 10, 11, 12]), min_size=1),
    )
    def test_day_count_and_idempotence(self, first, n_years, months):
        # Windows without February have a fixed count per year.
        w = SeasonWindow(months, first, first + n_years - 1)
        per_year = SeasonWindow(months, 2001, 2001).dates().size
        assert w.dates().size == per_year * n_years
        s = full_daily(first, first + n_years - 1)
        once = season_mask(s, w)
        assert season_mask(once, w) == once
        assert once.dates.size == w.dates().size


class TestWtSeries:
    def test_validation(self):
        d = np.datetime64("2000-06-01") + np.arange(3)
        with pytest.raises(ValidationError):
            WtSeries("x", ((0, 0),), d, [[1], [28], [1]])
        with pytest.raises(ValidationError):
            WtSeries("x", ((0, 0),), d[::-1], [[1], [2], [1]])
        with pytest.raises(ValidationError):
            WtSeries("x", ((0, 0),), d, [[1], [2]])

    def test_select_points(self):
        s = full_daily(2000, 2000, n_points=3)
        sub = s.select_points(RegionOfInterest(((2.0, 40.0), (0.0, 40.0))))
        assert sub.points == ((2.0, 40.0), (0.0, 40.0))
        with pytest.raises(ValidationError):
            s.select_points(RegionOfInterest(((9.0, 40.0),)))
