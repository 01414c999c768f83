"""Conformal boundary metric and the classification of its ends.

At an endpoint of the admissible interval the boundary metric degenerates
in one of a few model ways, selected by the multiplicities of the endpoint
as a root of P and of Q. Each model is confirmed by fitting the decay
exponent of the collapsing circle and the three model constants.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from ..utils.config import config
from ..utils.helpers import intercept_fit
from .curvature import constant_curvature_residual, curvature_at
from .errors import PreconditionViolated, UnrecognizedMultiplicityPattern
from .polyfam import MetricEval, MetricFamily, NakedParams, as_jet_matrix, get_family
from .jet2 import lift_coordinate
from .regularity import TWO_PI, Periods, resolve_periods
from .rootlab import admissible_intervals, diagonal_breakpoints, roots, snap_to_unit

logger = logging.getLogger(__name__)

DEGENERATION_PATHS = (
    "smooth-to-naked",
    "cone-to-naked",
    "cone-to-naked-boundary",
    "cusp-to-naked",
)

# pattern -> (kind, x-coefficient order, collapsing-circle order, model exponent)
_UNIT_MODELS = {
    (1, 1): ("cone", 0, 2, 2.0),
    (2, 1): ("naked", 1, 3, 6.0),
    (1, 2): ("naked", 1, 3, 6.0),
    (3, 1): ("cusp", 2, 4, -4.0),
    (1, 3): ("cusp", 2, 4, -4.0),
}


class BoundaryMetricEval(MetricEval):
    """Boundary 3-metric in the chart (ψ, φ, x) or (τ, σ, p)."""

    __slots__ = ()

    @property
    def g3(self):
        return self.g


class BoundaryEndReport(BaseModel):
    endpoint: float
    kind: str
    pattern: Tuple[int, int]
    side: float
    fitted_exponent: float
    model_exponent: float
    constants: Tuple[float, float, float]
    formula_constants: Tuple[float, float, float]
    rel_error: float
    angle: Optional[float] = None
    closed_form_angle: Optional[float] = None
    nominal_angle: Optional[float] = None
    orbit_angle: Optional[float] = None
    irrational_twist: bool = False
    path: Optional[str] = None
    parameter: Optional[float] = None


def boundary_metric_at(params, x: float) -> BoundaryMetricEval:
    """Exact jet evaluation of the boundary metric at ``x``.

    Raises:
        DegenerateLocus: x at a zero of P, Q or 1 − a²x⁴
        OutsideDomain: x outside the admissible boundary interval
    """
    family = get_family(params)
    t = float(x)
    family.check_boundary_point(t)
    rows = family.boundary_components(lift_coordinate("x", t))
    return BoundaryMetricEval(as_jet_matrix(rows), family.boundary_chart, (t,), (2, None))


def boundary_metric_values(params, x: float) -> np.ndarray:
    family = get_family(params)
    return np.array(family.boundary_components(float(x)), dtype=float)


def boundary_constant_curvature(params, x: float) -> Dict[str, float]:
    """Best constant sectional curvature of the boundary metric and its residual."""
    curv = curvature_at(boundary_metric_at(params, x))
    k, residual = constant_curvature_residual(curv)
    return {"x": float(x), "sectional_curvature": k, "residual": residual, "scalar": curv.scalar}


# Classification


def _fit_grid(family: MetricFamily, endpoint: float) -> np.ndarray:
    lo_w, hi_w = config.boundary_fit_window
    others = [b for b in diagonal_breakpoints(family) if abs(b - endpoint) > 1e-9]
    gap = min((abs(b - endpoint) for b in others), default=1.0)
    s_max = min(hi_w, 0.1 * gap)
    s_min = s_max * (lo_w / hi_w)
    return np.logspace(math.log10(s_min), math.log10(s_max), config.boundary_fit_points)


def _interior_side(family: MetricFamily, endpoint: float, offset: float) -> float:
    for sigma in (-1.0, 1.0):
        if family.boundary_admissible(endpoint + sigma * offset):
            return sigma
    raise PreconditionViolated(
        "boundary-endpoint", f"no admissible boundary points next to {endpoint!r}"
    )


def _pattern(family: MetricFamily, endpoint: float) -> Tuple[int, int]:
    m_p = roots(family.P).multiplicity_at(endpoint)
    m_q = roots(family.Q).multiplicity_at(endpoint) if family.is_toric else 0
    return m_p, m_q


def _slope(xs: np.ndarray, ys: np.ndarray) -> float:
    return float(np.polyfit(xs, ys, 1)[0])


def _rel_error(fitted: Sequence[float], formula: Sequence[float]) -> float:
    return max(abs(f - c) / abs(c) for f, c in zip(fitted, formula) if c != 0.0)


def _closing(params, family: MetricFamily, root: float, which: str, periods: Periods):
    vector, twist = family.killing_generator(root, which)
    lattice = resolve_periods(params, periods)
    closing = 2.0 * math.pi / twist if lattice is None else lattice.closing_parameter(vector)
    return closing, twist


def _classify_unit(params, family, endpoint, pattern, s, sigma, periods) -> BoundaryEndReport:
    kind, k1, k3, model = _UNIT_MODELS[pattern]
    t = endpoint + sigma * s
    P = np.asarray(family.P(t), dtype=float)
    Q = np.asarray(family.Q(t), dtype=float)
    d4 = (1.0 - t) * (1.0 + t) * (1.0 + t * t)
    c1 = np.abs(d4 * (1.0 / P - 1.0 / Q))
    a_coef = np.abs((P - Q) * (1.0 + t * t) ** 2 / (4.0 * d4))
    c3 = np.abs(P * Q / (4.0 * a_coef))

    if model == 2.0:
        exponent = _slope(np.log(s), np.log(c3))
    elif model == 6.0:
        exponent = _slope(np.log(2.0 * np.sqrt(s)), np.log(c3))
    else:
        exponent = _slope(-np.log(s), np.log(c3))

    constants = (
        abs(intercept_fit(s, c1 * s**k1)),
        abs(intercept_fit(s, a_coef)),
        abs(intercept_fit(s, c3 / s**k3)),
    )

    m_p, m_q = pattern
    main, other = (family.P, family.Q) if m_p >= m_q else (family.Q, family.P)
    if pattern == (1, 1):
        dp = float(family.P.derivative()(endpoint))
        dq = float(family.Q.derivative()(endpoint))
        formula = (4.0 * abs(1.0 / dp - 1.0 / dq), abs(dp - dq) / 4.0, abs(dp * dq) / 4.0)
    else:
        order = max(pattern)
        dm = abs(float(main.derivative(order)(endpoint)))
        do = abs(float(other.derivative()(endpoint)))
        factor = math.factorial(order)
        formula = (4.0 * factor / dm, do / 4.0, dm / factor)

    report = dict(
        endpoint=endpoint,
        kind=kind,
        pattern=pattern,
        side=sigma,
        fitted_exponent=exponent,
        model_exponent=model,
        constants=constants,
        formula_constants=formula,
        rel_error=_rel_error(constants, formula),
    )
    if pattern == (1, 1):
        closing, _ = _closing(params, family, endpoint, "P", periods)
        coef = abs(dp * dq) / (2.0 * abs(dp - dq))
        report["nominal_angle"] = TWO_PI * coef
        if closing is None:
            report["irrational_twist"] = True
        else:
            period_w = 2.0 * closing
            report["angle"] = math.sqrt(constants[2] / constants[0]) * period_w
            report["closed_form_angle"] = coef * period_w
            report["orbit_angle"] = period_w / math.sqrt(constants[0])
            if math.isclose(report["closed_form_angle"], TWO_PI, rel_tol=1e-6):
                report["kind"] = "smooth"
    return BoundaryEndReport(**report)


def _classify_rod(params, family, endpoint, pattern, s, sigma, periods) -> BoundaryEndReport:
    which = "P" if pattern[0] else "Q"
    order = max(pattern)
    main = family.polynomial(which)
    vector, twist = family.killing_generator(endpoint, which)

    c1, c_v, c2 = [], [], []
    for t in endpoint + sigma * s:
        b = boundary_metric_values(params, t)
        block = b[:2, :2]
        norm = float(vector @ block @ vector)
        c1.append(abs(b[2, 2]))
        c_v.append(abs(norm))
        c2.append(abs(float(np.linalg.det(block))) / abs(norm))
    c1, c_v, c2 = np.array(c1), np.array(c_v), np.array(c2)

    if family.is_toric:
        d4 = 1.0 - family.rotation * endpoint**4
        other = abs(float(family.polynomial("Q" if which == "P" else "P")(endpoint)))
        cross = 4.0 * family.rotation * endpoint**2 * other / d4
    else:
        d4, other, cross = 1.0, 1.0, 4.0 * endpoint**2

    deriv = abs(float(main.derivative(order)(endpoint)))
    if order == 1:
        kind = "cone"
        exponent = _slope(np.log(2.0 * np.sqrt(s)), np.log(c_v))
        c3_formula = deriv * d4
        formula = (d4 / deriv, deriv * other / c3_formula, c3_formula)
    else:
        kind = "separating_cusp"
        exponent = _slope(np.log(s), np.log(c_v))
        c3_formula = 0.5 * deriv * d4 + cross
        formula = (2.0 * d4 / deriv, 0.5 * deriv * other / c3_formula, c3_formula)

    constants = (
        abs(intercept_fit(s, c1 * s**order)),
        abs(intercept_fit(s, c2)),
        abs(intercept_fit(s, c_v / s**order)),
    )
    report = dict(
        endpoint=endpoint,
        kind=kind,
        pattern=pattern,
        side=sigma,
        fitted_exponent=exponent,
        model_exponent=2.0,
        constants=constants,
        formula_constants=formula,
        rel_error=_rel_error(constants, formula),
    )
    if order == 1:
        closing, _ = _closing(params, family, endpoint, which, periods)
        report["nominal_angle"] = TWO_PI * deriv / (2.0 * twist)
        if closing is None:
            report["irrational_twist"] = True
        else:
            report["angle"] = 0.5 * closing * math.sqrt(constants[2] / constants[0])
            report["closed_form_angle"] = 0.5 * closing * deriv
            if math.isclose(report["closed_form_angle"], TWO_PI, rel_tol=1e-6):
                report["kind"] = "smooth"
    return BoundaryEndReport(**report)


def classify_boundary_end(params, endpoint: float, periods: Periods = None) -> BoundaryEndReport:
    """Classify the boundary metric at an endpoint of the admissible interval.

    Args:
        params: Family parameters
        endpoint: ±1 (rotating families) or a root of P or Q
        periods: None (nominal), "auto", (Δφ, Δψ) or a PeriodLattice

    Returns:
        BoundaryEndReport with fitted exponent and constants

    Raises:
        UnrecognizedMultiplicityPattern: multiplicities without a model
        PreconditionViolated: endpoint is not a root of P or Q
    """
    family = get_family(params)
    endpoint = float(endpoint)
    rotating = family.is_toric and family.rotation == 1
    if rotating:
        endpoint = snap_to_unit(endpoint)
    pattern = _pattern(family, endpoint)
    unit = rotating and abs(endpoint) == 1.0

    if pattern == (0, 0):
        raise PreconditionViolated("endpoint-root", f"{endpoint!r} is not a root of P or Q")
    if unit and pattern not in _UNIT_MODELS:
        raise UnrecognizedMultiplicityPattern(pattern, endpoint)
    if not unit and (min(pattern) != 0 or max(pattern) > 2):
        raise UnrecognizedMultiplicityPattern(pattern, endpoint)

    s = _fit_grid(family, endpoint)
    # at a triple root P(endpoint ± s_min) is already below the domain floor
    sigma = _interior_side(family, endpoint, float(s[-1]))
    classify = _classify_unit if unit else _classify_rod
    report = classify(params, family, endpoint, pattern, s, sigma, periods)
    logger.debug(
        f"boundary end {endpoint!r}: {report.kind} pattern={pattern} "
        f"exponent={report.fitted_exponent:.4f} rel_error={report.rel_error:.3g}"
    )
    return report


def boundary_ends(params, periods: Periods = None) -> List[BoundaryEndReport]:
    """Classification at both ends and every junction of each component."""
    reports = []
    for comp in admissible_intervals(params):
        for t in (comp.lo, *comp.junctions, comp.hi):
            reports.append(classify_boundary_end(params, t, periods))
    return reports


# Degenerations of the naked subfamily


def degeneration_params(path: str, value: float, base: Optional[NakedParams] = None) -> NakedParams:
    """Parameters at ``value`` along a named degeneration path.

    Every path reaches α₂ = α₃ = 0 at ``value == 0``, the naked configuration
    for the default base.

    Raises:
        PreconditionViolated: unknown path or value of the wrong sign
    """
    base = base or NakedParams(alpha1=-0.5, alpha2=0.0, alpha3=0.0, alpha4=3.0)
    if path == "smooth-to-naked" and value >= 0.0:
        return base.model_copy(update={"alpha2": 0.0, "alpha3": value})
    if path == "cone-to-naked" and value <= 0.0:
        return base.model_copy(update={"alpha2": 0.0, "alpha3": value})
    if path == "cone-to-naked-boundary" and value <= 0.0:
        return base.model_copy(update={"alpha2": -math.sqrt(-value), "alpha3": value})
    if path == "cusp-to-naked" and value >= 0.0:
        return base.model_copy(update={"alpha2": value, "alpha3": 0.0})
    raise PreconditionViolated("path-parameter", f"value {value!r} is not on path {path!r}")


def default_path_values(path: str, samples: int = 3) -> List[float]:
    """``samples`` decades approaching the limit, then the limit 0 itself."""
    sign = -1.0 if path in ("cone-to-naked", "cone-to-naked-boundary") else 1.0
    return [sign * 0.1 * 10.0 ** (-k) for k in range(samples)] + [0.0]


def degeneration_endpoint(params) -> float:
    """Junction closest to 1 if there is one, otherwise the upper end."""
    comps = admissible_intervals(params)
    if not comps:
        raise PreconditionViolated("admissible-interval", f"no admissible component for {params!r}")
    comp = comps[-1]
    if comp.junctions:
        return min(comp.junctions, key=lambda j: abs(1.0 - j))
    return comp.hi


def degeneration_path(
    path: str,
    values: Optional[Sequence[float]] = None,
    samples: int = 3,
    base: Optional[NakedParams] = None,
    periods: Periods = "auto",
) -> List[BoundaryEndReport]:
    """Boundary classification along a degeneration path, in input order."""
    if path not in DEGENERATION_PATHS:
        raise PreconditionViolated("path", f"unknown degeneration path {path!r}")
    if values is None:
        values = default_path_values(path, samples)
    reports = []
    for value in values:
        params = degeneration_params(path, float(value), base)
        end = classify_boundary_end(params, degeneration_endpoint(params), periods)
        reports.append(end.model_copy(update={"path": path, "parameter": float(value)}))
    return reports
