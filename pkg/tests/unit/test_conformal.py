"""Tests for the boundary metric and its end classification."""

import math

import numpy as np
import pytest

from einstein_lab.core.conformal import (
    DEGENERATION_PATHS,
    boundary_constant_curvature,
    boundary_ends,
    boundary_metric_at,
    classify_boundary_end,
    default_path_values,
    degeneration_endpoint,
    degeneration_params,
    degeneration_path,
)
from einstein_lab.core.errors import (
    DegenerateLocus,
    OutsideDomain,
    PreconditionViolated,
    UnrecognizedMultiplicityPattern,
)
from einstein_lab.core.polyfam import CMetricParams, NakedParams, PDParams
from einstein_lab.core.rootlab import admissible_intervals

CUSPIDAL = NakedParams(alpha1=-1.0, alpha2=0.0, alpha3=0.0, alpha4=1.0)
NAKED = NakedParams(alpha1=-0.5, alpha2=0.0, alpha3=0.0, alpha4=3.0)
CONICAL = NakedParams(alpha1=-0.5, alpha2=0.5, alpha3=0.1, alpha4=1.0)


class TestBoundaryMetric:
    def test_round_sphere(self):
        result = boundary_constant_curvature(CMetricParams(mu=0.0, nu=0.0), -0.5)
        assert result["sectional_curvature"] == pytest.approx(0.25)
        assert result["residual"] < 1e-6

    def test_chart_and_values(self):
        m = boundary_metric_at(CMetricParams(mu=1.0, nu=0.5), -0.5)
        assert m.chart == ("psi", "phi", "x")
        assert m.dimension == 3
        assert np.allclose(m.values(), m.values().T)
        assert np.all(m.eigenvalues() > 0.0)

    def test_domain(self):
        with pytest.raises(DegenerateLocus):
            boundary_metric_at(CMetricParams(mu=1.0, nu=0.5), -1.0)
        with pytest.raises(OutsideDomain):
            boundary_metric_at(CMetricParams(mu=1.0, nu=0.5), 0.5)


class TestClassification:
    def test_cusp_pattern_at_plus_one(self):
        report = classify_boundary_end(CUSPIDAL, 1.0)
        assert report.pattern == (3, 1)
        assert report.kind == "cusp"
        assert report.side == -1.0
        assert report.model_exponent == -4.0
        assert report.fitted_exponent == pytest.approx(-4.0, abs=0.05)
        assert report.rel_error < 0.05

    def test_cusp_pattern_at_minus_one(self):
        report = classify_boundary_end(CUSPIDAL, -1.0)
        assert report.pattern == (1, 3)
        assert report.kind == "cusp"
        assert report.side == 1.0

    def test_naked_pattern(self):
        report = classify_boundary_end(NAKED, 1.0)
        assert report.pattern == (2, 1)
        assert report.kind == "naked"
        assert report.fitted_exponent == pytest.approx(6.0, abs=0.1)
        assert report.rel_error < 0.05

    def test_conical_unit_end(self):
        report = classify_boundary_end(CONICAL, 1.0)
        assert report.pattern == (1, 1)
        assert report.kind in ("cone", "smooth")
        assert report.fitted_exponent == pytest.approx(2.0, abs=0.05)
        assert report.angle == pytest.approx(report.closed_form_angle, rel=1e-3)
        assert report.nominal_angle > 0.0

    def test_rod_end_with_auto_periods_is_smooth(self):
        report = classify_boundary_end(CMetricParams(mu=1.0, nu=0.5), -1.0, "auto")
        assert report.pattern == (1, 0)
        assert report.kind == "smooth"
        assert report.closed_form_angle == pytest.approx(2.0 * math.pi)
        assert report.angle == pytest.approx(2.0 * math.pi, rel=1e-2)

    def test_separating_cusp_at_junction(self):
        report = classify_boundary_end(CMetricParams(mu=16.0, nu=8.0), -0.25)
        assert report.pattern == (2, 0)
        assert report.kind == "separating_cusp"

    def test_unrecognized_pattern(self):
        params = PDParams(a=0, b=-1.0, c=1.0, d=0.0, e=0.0)
        with pytest.raises(UnrecognizedMultiplicityPattern) as err:
            classify_boundary_end(params, 0.0)
        assert err.value.pattern == (3, 0)

    def test_endpoint_must_be_a_root(self):
        with pytest.raises(PreconditionViolated) as err:
            classify_boundary_end(CMetricParams(mu=1.0, nu=0.5), -0.5)
        assert err.value.clause == "endpoint-root"

    def test_all_ends(self):
        reports = boundary_ends(CMetricParams(mu=16.0, nu=8.0))
        assert [r.kind for r in reports] == ["cone", "separating_cusp", "separating_cusp", "cone"]


class TestDegenerations:
    def test_params_along_paths(self):
        assert degeneration_params("smooth-to-naked", 0.1).alpha3 == 0.1
        boundary = degeneration_params("cone-to-naked-boundary", -0.04)
        assert boundary.alpha2 == pytest.approx(-0.2)
        assert boundary.alpha3 == -0.04
        assert degeneration_params("cusp-to-naked", 0.2).alpha2 == 0.2

    @pytest.mark.parametrize(
        "path, value",
        [("smooth-to-naked", -0.1), ("cone-to-naked", 0.1), ("cusp-to-naked", -0.1), ("x", 1.0)],
    )
    def test_wrong_sign(self, path, value):
        with pytest.raises(PreconditionViolated):
            degeneration_params(path, value)

    def test_default_values(self):
        assert default_path_values("cone-to-naked", 3) == pytest.approx([-0.1, -0.01, -0.001, 0.0])
        assert default_path_values("cusp-to-naked", 2) == pytest.approx([0.1, 0.01, 0.0])

    def test_cone_angles_shrink(self):
        reports = degeneration_path("cone-to-naked", samples=4)
        assert [r.parameter for r in reports] == pytest.approx([-0.1, -0.01, -0.001, -0.0001, 0.0])
        assert all(r.path == "cone-to-naked" for r in reports)
        angles = [r.angle for r in reports[:-1]]
        assert all(a > b for a, b in zip(angles, angles[1:]))
        assert angles[-1] < 0.1
        assert reports[-1].kind == "naked"

    def test_smooth_path(self):
        reports = degeneration_path("smooth-to-naked", values=[0.1, 0.01])
        assert [r.kind for r in reports] == ["smooth", "smooth"]

    def test_cusp_path(self):
        reports = degeneration_path("cusp-to-naked", values=[0.1])
        assert reports[0].kind == "separating_cusp"
        assert reports[0].endpoint == pytest.approx(0.9, abs=1e-6)

    def test_endpoint_prefers_junction(self):
        assert degeneration_endpoint(degeneration_params("cusp-to-naked", 0.2)) == pytest.approx(
            0.8, abs=1e-6
        )

    def test_unknown_path(self):
        assert "cone-to-naked" in DEGENERATION_PATHS
        with pytest.raises(PreconditionViolated) as err:
            degeneration_path("neck")
        assert err.value.clause == "path"

    def test_small_smooth_parameter(self):
        (report,) = degeneration_path("smooth-to-naked", values=[0.001])
        assert report.kind == "smooth"

    def test_small_cone_parameter(self):
        (report,) = degeneration_path("cone-to-naked", values=[-1e-4])
        assert report.kind == "cone"
        assert report.angle < 0.1

    @pytest.mark.parametrize("path", DEGENERATION_PATHS)
    def test_paths_reach_the_naked_limit(self, path):
        params = degeneration_params(path, 0.0)
        assert (params.alpha2, params.alpha3) == (0.0, 0.0)
        (report,) = degeneration_path(path, values=[0.0])
        assert report.kind == "naked"
        assert report.pattern == (2, 1)
        assert report.endpoint == pytest.approx(1.0, abs=1e-9)


class TestSolverEndpoints:
    def test_cusp_end_from_computed_interval(self):
        # the computed lower end misses −1 by about 1e-11
        comp = admissible_intervals(CUSPIDAL)[0]
        report = classify_boundary_end(CUSPIDAL, comp.lo)
        assert report.pattern == (1, 3)
        assert report.kind == "cusp"

    def test_cusp_ends_with_auto_periods(self):
        reports = boundary_ends(CUSPIDAL, "auto")
        assert reports[0].kind == "cusp"
        assert reports[-1].kind == "cusp"
