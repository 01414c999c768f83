"""Tests for cone angles, period lattices, cusps and necks."""

import logging
import math

import pytest

from einstein_lab.core.errors import NotDoubleRoot, NotSimpleRoot, PreconditionViolated
from einstein_lab.core.polyfam import (
    CarterRootsParams,
    CMetricParams,
    NakedParams,
    PDParams,
)
from einstein_lab.core.regularity import (
    PeriodLattice,
    auto_period_lattice,
    bulk_ends,
    circumference_ratio,
    cone_angle,
    cusp_model,
    neck_profile,
    resolve_periods,
    smoothness_check,
    with_root_gap,
)
from einstein_lab.utils.helpers import loglog_slope

SMOOTH = CMetricParams(mu=1.0, nu=0.5)
CORNER = CMetricParams(mu=16.0, nu=8.0)
SMOOTH_PERIOD = 4.0 * math.pi / 1.5


class TestConeAngle:
    def test_nominal_periods(self):
        cone = cone_angle(SMOOTH, -1.0, "P")
        assert cone.angle_coefficient == pytest.approx(0.75)
        assert cone.angle == pytest.approx(1.5 * math.pi)
        assert cone.nominal_angle == pytest.approx(1.5 * math.pi)
        assert cone.required_period == pytest.approx(SMOOTH_PERIOD)
        assert not cone.smooth

    def test_auto_periods_are_smooth(self):
        for root, which in ((-1.0, "P"), (0.0, "Q")):
            cone = cone_angle(SMOOTH, root, which, "auto")
            assert cone.angle == pytest.approx(2.0 * math.pi)
            assert cone.smooth

    def test_explicit_periods(self):
        cone = cone_angle(SMOOTH, -1.0, "P", (0.5 * SMOOTH_PERIOD, SMOOTH_PERIOD))
        assert cone.angle == pytest.approx(math.pi)
        assert not cone.smooth

    def test_double_root_is_not_a_rod(self):
        with pytest.raises(NotSimpleRoot):
            cone_angle(CORNER, -0.25, "P")
        with pytest.raises(NotSimpleRoot):
            cone_angle(SMOOTH, -0.5, "P")

    @pytest.mark.parametrize("beta", [0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 1.0, 1.25, 1.5, 2.0])
    def test_circumference_ratio_matches_angle(self, beta):
        periods = (beta * SMOOTH_PERIOD, beta * SMOOTH_PERIOD)
        rows = circumference_ratio(SMOOTH, -1.0, "P", periods)
        assert rows[0]["ratio"] == pytest.approx(beta, rel=1e-2)
        assert [r["delta"] for r in rows] == sorted(r["delta"] for r in rows)

    def test_nominal_circumference_ratio(self):
        rows = circumference_ratio(SMOOTH, 0.0, "Q")
        assert rows[0]["ratio"] == pytest.approx(0.75, rel=1e-2)


class TestSmoothness:
    def test_auto_and_explicit(self):
        assert smoothness_check(SMOOTH, (-1.0, 0.0), "auto")
        assert smoothness_check(SMOOTH, (-1.0, 0.0), (SMOOTH_PERIOD, SMOOTH_PERIOD))
        assert not smoothness_check(SMOOTH, (-1.0, 0.0), None)

    @pytest.mark.parametrize(
        "params, interval, clause",
        [
            (SMOOTH, (0.0, -1.0), "interval-order"),
            (SMOOTH, (-1.0, 0.5), "signs"),
            (CORNER, (-1.0, -0.25), "simple-root-Q"),
            (CarterRootsParams(p3=-1.0, p4=1.0, eps=0.1), (-1.0, 1.0), "toric-family"),
        ],
    )
    def test_failed_clauses(self, params, interval, clause):
        with pytest.raises(PreconditionViolated) as err:
            smoothness_check(params, interval, None)
        assert err.value.clause == clause


class TestLattice:
    def test_rectangular(self):
        lattice = PeriodLattice.rectangular(2.0, 3.0)
        assert lattice.area == pytest.approx(6.0)
        assert lattice.closing_parameter((0.0, 1.0)) == pytest.approx(2.0)
        assert lattice.closing_parameter((1.0, 0.0)) == pytest.approx(3.0)

    def test_rational_and_irrational_twist(self):
        lattice = PeriodLattice.rectangular(1.0, 1.0)
        assert lattice.closing_parameter((1.0, 0.5)) == pytest.approx(2.0)
        assert lattice.closing_parameter((1.0, math.sqrt(2.0))) is None

    def test_auto_lattice(self):
        lattice = auto_period_lattice(SMOOTH)
        assert lattice.source == "auto"
        assert lattice.area == pytest.approx(SMOOTH_PERIOD**2)

    def test_resolve(self, caplog):
        assert resolve_periods(SMOOTH, None) is None
        assert resolve_periods(SMOOTH, (1.0, 2.0)).area == pytest.approx(2.0)
        with pytest.raises(ValueError):
            resolve_periods(SMOOTH, "nominal")
        triple = NakedParams(alpha1=-1.0, alpha2=0.0, alpha3=0.0, alpha4=1.0)
        with caplog.at_level(logging.WARNING):
            assert resolve_periods(triple, "auto") is None
        assert "automatic periods unavailable" in caplog.text


class TestCusps:
    def test_cusp_coefficient(self):
        report = cusp_model(CORNER, -0.25)
        assert report.kind == "cusp"
        assert report.which == "P"
        assert report.coefficient == pytest.approx(12.0)
        assert report.model_parameters["second_derivative"] == pytest.approx(24.0)
        assert report.verified

    def test_q_side_cusp(self):
        report = cusp_model(CORNER, -0.75, "Q")
        assert report.which == "Q"
        assert report.verified

    def test_not_double(self):
        with pytest.raises(NotDoubleRoot):
            cusp_model(CORNER, -1.0)

    def test_bulk_ends(self):
        report = bulk_ends(CORNER)
        kinds = [e["kind"] for e in report["ends"]]
        assert kinds == ["cone", "cusp", "cusp", "cone"]
        assert report["ends"][0]["angle"] == pytest.approx(9.0 * math.pi)
        assert not report["smooth"]
        assert report["lattice"] is None

    def test_bulk_ends_smooth_with_auto_periods(self):
        report = bulk_ends(SMOOTH, "auto")
        assert [e["kind"] for e in report["ends"]] == ["smooth_axis", "smooth_axis"]
        assert report["smooth"]
        assert report["lattice"] is not None


class TestNeck:
    def test_root_gap_paths(self):
        opened = with_root_gap(CMetricParams(mu=12.0, nu=2.0 * math.sqrt(12.0)), 0.01)
        assert opened.nu < 2.0 * math.sqrt(12.0)
        assert with_root_gap(
            NakedParams(alpha1=-0.5, alpha2=0.0, alpha3=0.0, alpha4=3.0), 0.1
        ).alpha3 == pytest.approx(0.01)
        assert with_root_gap(CarterRootsParams(), 0.2).eps == 0.2
        with pytest.raises(PreconditionViolated):
            with_root_gap(PDParams(a=1, c=1.0, e=1.0), 0.1)

    def test_neck_shrinks_linearly(self):
        mu = 12.0
        params = CMetricParams(mu=mu, nu=2.0 * math.sqrt(mu))
        eps_list = [0.02, 0.01, 0.005, 0.0025]
        samples = neck_profile(params, -1.0 / math.sqrt(mu), eps_list)
        circumferences = [s.min_circumference for s in samples]
        assert all(a > b for a, b in zip(circumferences, circumferences[1:]))
        assert loglog_slope(eps_list, circumferences) == pytest.approx(1.0, abs=0.1)
        for s in samples:
            assert s.center == pytest.approx(-1.0 / math.sqrt(mu), abs=1e-2)
