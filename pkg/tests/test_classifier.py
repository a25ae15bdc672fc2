import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from wtsel.classifier import (
    ClassifierConfig,
    CrossStencil,
    FlowIndices,
    SlpField,
    classify_day,
    classify_indices,
    classify_series,
    compute_flow_indices,
    direction_sector,
)
from wtsel.core import GridSpec, RegionOfInterest, ValidationError, WeatherType

LONS = np.arange(-20.0, 20.01, 2.5)
LATS = np.arange(27.5, 52.51, 2.5)
GRID = GridSpec.from_axes(LONS, LATS)
CENTRE = (0.0, 40.0)
UNIT = ClassifierConfig(coefficients=(1.0, 1.0, 1.0, 1.0))


def make_field(func, n_days=1):
    lon, lat = np.meshgrid(LONS, LATS)
    days = [func(lon, lat, d) for d in range(n_days)]
    dates = np.datetime64("2000-06-01") + np.arange(n_days)
    return SlpField(GRID, dates, np.stack(days))


def indices_at(field, centre=CENTRE, config=None, day=0):
    stencil = CrossStencil(centre)
    return compute_flow_indices(field, field.dates[day], stencil, config)


def flip(wt: WeatherType) -> WeatherType:
    """A<->C family swap with the direction rotated by 180 degrees."""
    code = wt.code
    if code == "U":
        return wt
    if code in ("PA", "PC"):
        return WeatherType.PC if code == "PA" else WeatherType.PA
    opposite = dict(zip(oracles.CLOCKWISE, oracles.CLOCKWISE[4:] + oracles.CLOCKWISE[:4]))
    family = {"DA": "DC", "DC": "DA", "PD": "PD"}[code[:2]]
    return WeatherType[family + opposite[code[2:]]]


class TestStencil:
    def test_sixteen_points_symmetric(self):
        st_ = CrossStencil(CENTRE)
        pts = st_.points()
        assert len(pts) == 16 and len(set(pts)) == 16
        mirrored = {(round(-lon, 6) + 0.0, lat) for lon, lat in pts}
        assert mirrored == set(pts)

    def test_out_of_bounds_names_point(self):
        field = make_field(lambda lon, lat, d: 1010 + 0 * lon)
        with pytest.raises(ValidationError, match="stencil out of bounds"):
            indices_at(field, centre=(15.0, 40.0))

    def test_series_error_names_roi_point(self):
        field = make_field(lambda lon, lat, d: 1010 + 0 * lon)
        with pytest.raises(ValidationError, match=r"ROI point \(15\.0, 40\.0\)"):
            classify_series(field, RegionOfInterest(((15.0, 40.0),)))


class TestFlowIndices:
    def test_uniform_field_all_zero(self):
        idx = indices_at(make_field(lambda lon, lat, d: 1013.0 + 0 * lon))
        assert (idx.W, idx.S, idx.F, idx.ZW, idx.ZS, idx.Z) == (0, 0, 0, 0, 0, 0)

    def test_meridional_gradient_unit_coefficients(self):
        idx = indices_at(make_field(lambda lon, lat, d: 1010 - 2.0 * (lat - 40)), config=UNIT)
        assert idx.W > 0 and idx.S == 0 and idx.Z == 0
        assert idx.W == pytest.approx(20.0)

    def test_meridional_gradient_latitude_coefficients(self):
        # Latitude-dependent ZW weights leave a small residual vorticity.
        idx = indices_at(make_field(lambda lon, lat, d: 1010 - 2.0 * (lat - 40)))
        assert idx.W > 0 and idx.S == 0
        assert abs(idx.Z) < idx.F
        cfg = ClassifierConfig()
        _, b, c, _ = cfg.coefficients_at(40.0)
        assert idx.Z == pytest.approx(10 * 2.0 * (b - c), rel=1e-12)

    def test_radial_low(self):
        idx = indices_at(make_field(lambda lon, lat, d: 990 + 0.05 * (lon**2 + (lat - 40) ** 2)))
        assert idx.F == 0 and idx.W == 0 and idx.S == 0
        assert idx.Z > 0

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(950, 1050), min_size=LONS.size * LATS.size, max_size=LONS.size * LATS.size))
    def test_matches_oracle(self, flat):
        p = np.array(flat, dtype=float).reshape(LATS.size, LONS.size)
        field = SlpField(GRID, [np.datetime64("2000-06-01")], p[None])
        lookup = {(round(lo, 6), round(la, 6)): p[iy, ix] for iy, la in enumerate(LATS) for ix, lo in enumerate(LONS)}
        W, S, Z = oracles.jc_indices(lambda lo, la: lookup[(round(lo, 6), round(la, 6))], *CENTRE)
        idx = indices_at(field)
        assert idx.W == pytest.approx(W, abs=1e-9)
        assert idx.S == pytest.approx(S, abs=1e-9)
        assert idx.Z == pytest.approx(Z, abs=1e-9)
        assert idx.Z == idx.ZW + idx.ZS
        assert idx.F >= 0
        assert idx.F**2 == pytest.approx(idx.W**2 + idx.S**2, rel=1e-9, abs=1e-12)


class TestClassifyDay:
    def test_calm(self):
        assert classify_day(FlowIndices(0, 0, 0, 0, 0, 0)) is WeatherType.U
        zero = ClassifierConfig(u_flow=0, u_vort=0)
        assert classify_day(FlowIndices(0, 0, 0, 0, 0, 0), zero) is WeatherType.U

    def test_pure_westerly(self):
        assert classify_day(FlowIndices(10, 0, 10, 0, 0, 0)) is WeatherType.PDW

    def test_pure_cyclonic(self):
        zero = ClassifierConfig(u_flow=0, u_vort=0)
        assert classify_day(FlowIndices(1, 0, 1, 0, 5, 5), zero) is WeatherType.PC
        # Under the default weak-flow thresholds the same indices are unclassified.
        assert classify_day(FlowIndices(1, 0, 1, 0, 5, 5)) is WeatherType.U

    def test_boundary_ties_go_hybrid(self):
        assert classify_day(FlowIndices(10, 0, 10, 0, 10, 10)) is WeatherType.DCW
        assert classify_day(FlowIndices(10, 0, 10, 0, -20, -20)) is WeatherType.DAW
        assert classify_day(FlowIndices(10, 0, 10, 0, 20.000001, 20.000001)) is WeatherType.PC

    @pytest.mark.parametrize(
        "W,S,code",
        [(0, -1, "N"), (-1, -1, "NE"), (-1, 0, "E"), (-1, 1, "SE"),
         (0, 1, "S"), (1, 1, "SW"), (1, 0, "W"), (1, -1, "NW")],
    )
    def test_sectors(self, W, S, code):
        assert oracles.CLOCKWISE[int(direction_sector(W, S))] == code
        assert oracles.from_bearing(W, S) == code

    def test_boundary_goes_clockwise(self):
        # From-bearing exactly 22.5 degrees lies between N and NE.
        t = math.radians(22.5 + 180.0)
        W, S = math.sin(t), math.cos(t)
        from_deg = (math.degrees(math.atan2(W, S)) + 180.0) % 360.0
        sector = int(direction_sector(W, S))
        expected = 1 if from_deg >= 22.5 else 0
        assert sector == expected

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(0)
        W, S, Z = rng.normal(0, 15, (3, 500))
        vec = classify_indices(W, S, Z)
        for k in range(W.size):
            F = math.hypot(W[k], S[k])
            assert vec[k] == classify_day(FlowIndices(W[k], S[k], F, 0, Z[k], Z[k]))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            classify_indices([np.nan], [0], [0])


class TestClassifySeries:
    def test_uniform_field_is_u(self):
        field = make_field(lambda lon, lat, d: 1000.0 + d + 0 * lon, n_days=5)
        roi = RegionOfInterest.box([-2.5, 0.0, 2.5], [37.5, 40.0])
        out = classify_series(field, roi)
        assert np.all(out.values == WeatherType.U)

    def test_single_point_equals_classify_day(self):
        rng = np.random.default_rng(1)
        field = make_field(lambda lon, lat, d: 1010 + rng.normal(0, 8, lon.shape), n_days=20)
        out = classify_series(field, RegionOfInterest((CENTRE,)))
        for d in range(20):
            assert out.values[d, 0] == classify_day(indices_at(field, day=d))

    def test_permuting_roi_permutes_output(self):
        rng = np.random.default_rng(2)
        field = make_field(lambda lon, lat, d: 1010 + rng.normal(0, 8, lon.shape), n_days=10)
        pts = RegionOfInterest.box([-2.5, 0.0, 2.5], [37.5, 40.0, 42.5]).points
        perm = [4, 0, 8, 2, 6, 1, 3, 7, 5]
        a = classify_series(field, RegionOfInterest(pts))
        b = classify_series(field, RegionOfInterest(tuple(pts[k] for k in perm)))
        assert np.array_equal(a.values[:, perm], b.values)

    def test_negation_swaps_families(self):
        rng = np.random.default_rng(3)
        p = rng.integers(985, 1036, size=(30, LATS.size, LONS.size)).astype(float)
        dates = np.datetime64("2000-06-01") + np.arange(30)
        roi = RegionOfInterest.box([-2.5, 0.0, 2.5], [37.5, 40.0, 42.5])
        a = classify_series(SlpField(GRID, dates, p), roi)
        b = classify_series(SlpField(GRID, dates, 2020.0 - p), roi)
        for x, y in zip(a.values.ravel(), b.values.ravel()):
            assert flip(WeatherType(int(x))) is WeatherType(int(y))
