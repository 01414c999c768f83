"""Tests for the metric families, parameter parsing and metric evaluation."""

from types import SimpleNamespace

import numpy as np
import pytest
from pydantic import ValidationError

from einstein_lab.core.errors import DegenerateLocus, DegenerateNormalization, OutsideDomain
from einstein_lab.core.polyfam import (
    CarterRootsParams,
    CMetricParams,
    NakedParams,
    PDParams,
    Quartic,
    carter_polynomials,
    cmetric_polynomials,
    family_factory,
    get_family,
    metric_at,
    metric_at_fd,
    metric_values,
    naked_polynomials,
    params_from_json,
    params_to_json,
    pd_polynomials,
)
from einstein_lab.core.rootlab import sample_admissible_points


def test_quartic_evaluation_and_derivative():
    q = Quartic([1.0, -2.0, 0.0, 3.0])
    assert q(2.0) == pytest.approx(1.0 - 4.0 + 24.0)
    assert q.degree == 3
    assert q.derivative().coeffs == (-2.0, 0.0, 9.0, 0.0, 0.0)
    assert q.derivative(2)(1.0) == pytest.approx(18.0)
    with pytest.raises(ValueError):
        Quartic([1, 2, 3, 4, 5, 6])


def test_pd_polynomials():
    P, Q = pd_polynomials(PDParams(b=0.0, c=1.0, d=0.0, e=1.0))
    assert P.coeffs == (1.0, 1.0, 0.0, 1.0, 0.0)
    assert Q.coeffs == (0.0, 1.0, 0.0, 1.0, 1.0)
    t = 0.37
    assert Q(t) - P(t) == pytest.approx(t**4 - 1.0)


def test_cmetric_polynomials_factor():
    P, Q = cmetric_polynomials(CMetricParams(mu=16.0, nu=8.0))
    assert P(-0.25) == 0.0
    assert Q(-0.75) == 0.0
    assert P(-1.0) == 0.0
    assert Q(0.0) == 0.0
    # expanded coefficients agree with the factored form
    expanded = Quartic(P.coeffs)
    assert expanded(0.3) == pytest.approx(P(0.3))


def test_naked_polynomials_normalization():
    params = NakedParams(alpha1=-1.0, alpha2=0.0, alpha3=0.0, alpha4=1.0)
    assert params.c_infinity == pytest.approx(-0.5)
    P, Q = naked_polynomials(params)
    for t in (-0.7, 0.1, 0.9):
        assert P(t) == pytest.approx(-0.5 * (t + 1.0) * (t - 1.0) ** 3)
        assert Q(t) - P(t) == pytest.approx(t**4 - 1.0)
    # the expanded form follows the same normalization
    assert Quartic(P.coeffs)(0.1) == pytest.approx(P(0.1))


def test_naked_degenerate_normalization():
    params = NakedParams(alpha1=1.0, alpha2=0.0, alpha3=0.0, alpha4=1.0)
    with pytest.raises(DegenerateNormalization):
        naked_polynomials(params)


def test_carter_root_form():
    params = CarterRootsParams(p3=-1.0, p4=1.0, eps=0.0)
    assert params.p0 == 0.0
    P, Q = carter_polynomials(params)
    assert P(0.5) == pytest.approx(0.25 * (0.25 - 1.0))
    assert P.coeffs == Q.coeffs
    assert P.coeffs[3] == pytest.approx(0.0)


def test_carter_roots_must_be_ordered():
    with pytest.raises(ValidationError):
        CarterRootsParams(p3=1.0, p4=-1.0)


def test_params_from_json_shapes():
    nested = params_from_json('{"family": "cmetric", "params": {"mu": 16, "nu": 8}}')
    flat = params_from_json({"family": "cmetric", "mu": 16, "nu": 8})
    assert nested == flat == CMetricParams(mu=16.0, nu=8.0)
    assert params_to_json(nested) == {"family": "cmetric", "params": {"mu": 16.0, "nu": 8.0}}


def test_params_from_json_rejects_foreign_fields():
    with pytest.raises(ValidationError):
        params_from_json({"family": "pd", "mu": 3.0})
    with pytest.raises(ValidationError):
        params_from_json({"family": "kerr"})


def test_factory_creates_providers():
    assert family_factory.available() == ["carter", "carter-roots", "cmetric", "naked", "pd"]
    family = family_factory.create(PDParams(a=1, c=1.0, e=1.0))
    assert family.is_toric
    assert family.rotation == 1
    assert get_family(CMetricParams(mu=1.0, nu=0.5)).rotation == 0
    assert not get_family(CarterRootsParams()).is_toric
    with pytest.raises(ValueError):
        family_factory.create(SimpleNamespace(family="kerr"))


@pytest.mark.parametrize(
    "params",
    [
        CMetricParams(mu=16.0, nu=8.0),
        PDParams(a=1, b=0.0, c=1.0, d=0.0, e=1.0),
        NakedParams(alpha1=-0.5, alpha2=0.0, alpha3=0.0, alpha4=3.0),
        CarterRootsParams(p3=-1.0, p4=1.0, eps=0.1),
    ],
)
def test_metric_is_positive_definite(params):
    for point in sample_admissible_points(params, 5, seed=7):
        m = metric_at(params, point)
        g = m.values()
        assert m.dimension == 4
        assert np.allclose(g, g.T)
        assert np.all(m.eigenvalues() > 0.0)
        assert np.allclose(g, metric_values(params, point))


def test_metric_chart_metadata():
    m = metric_at(CMetricParams(mu=1.0, nu=0.5), (-0.6, -0.2))
    assert m.chart == ("psi", "phi", "x", "y")
    assert m.point == (-0.6, -0.2)
    assert get_family(CarterRootsParams()).chart == ("tau", "sigma", "p", "q")


def test_metric_domain_errors():
    params = CMetricParams(mu=1.0, nu=0.5)
    with pytest.raises(OutsideDomain):
        metric_at(params, (0.2, 0.1))
    with pytest.raises(DegenerateLocus):
        metric_at(params, (-1.0, -0.5))
    with pytest.raises(OutsideDomain):
        # Q(y) > 0 for y > 0
        metric_at(params, (-0.5, 0.5))


def test_jets_agree_with_finite_differences():
    params = PDParams(a=1, b=0.0, c=1.0, d=0.0, e=1.0)
    point = (-0.5, -0.2)
    g, dg, ddg = metric_at(params, point).arrays()
    g_fd, dg_fd, ddg_fd = metric_at_fd(params, point, step=1e-4).arrays()
    assert np.allclose(g, g_fd)
    assert np.allclose(dg, dg_fd, rtol=1e-5, atol=1e-5 * np.abs(dg).max())
    assert np.allclose(ddg, ddg_fd, rtol=1e-3, atol=1e-4 * np.abs(ddg).max())


def test_params_from_json_rejects_non_objects():
    with pytest.raises(ValidationError):
        params_from_json("[1, 2]")
    with pytest.raises(ValidationError):
        params_from_json("3.5")


@pytest.mark.parametrize(
    "params, fields",
    [
        (PDParams(a=1, b=0.0, c=1.0, d=0.0, e=1.0), ("b", "c", "d", "e")),
        (CMetricParams(mu=16.0, nu=8.0), ("mu", "nu")),
        (
            NakedParams(alpha1=-0.5, alpha2=0.0, alpha3=0.0, alpha4=3.0),
            ("alpha1", "alpha2", "alpha4"),
        ),
    ],
)
def test_metric_depends_smoothly_on_parameters(params, fields):
    delta = 1e-6
    point = sample_admissible_points(params, 1, seed=12)[0]
    g = metric_values(params, point)
    for name in fields:
        value = getattr(params, name)

        def shifted(step):
            return metric_values(params.model_copy(update={name: value + step}), point)

        d1 = np.abs(shifted(delta) - g).max()
        d2 = np.abs(shifted(2.0 * delta) - g).max()
        assert d1 <= 1e3 * delta * (1.0 + np.abs(g).max())
        # linear response: doubling the step doubles the change
        assert d2 / d1 == pytest.approx(2.0, rel=1e-2)
