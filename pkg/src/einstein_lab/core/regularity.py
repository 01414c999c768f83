"""Regularity of the bulk metric at the rods and double roots.

Simple roots of P or Q close the metric with a cone-edge singularity whose
angle depends on the periods of the Killing coordinates; double roots open
up into cusps. Periods are always explicit: ``None`` means the nominal
convention where the rotated angle coordinates are 2π-periodic.
"""

import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, optimize

from ..utils.config import config
from .errors import (
    DegenerateLocus,
    NotDoubleRoot,
    NotSimpleRoot,
    PreconditionViolated,
)
from .polyfam import (
    CarterRootsParams,
    CMetricParams,
    MetricFamily,
    NakedParams,
    Quartic,
    get_family,
    metric_values,
)
from .rootlab import AdmissibleComponent, admissible_intervals, carter_q_range, roots

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
PARTNER_FRACTIONS = (0.25, 0.5, 0.75)


class PeriodLattice(BaseModel):
    """Lattice of identifications of the Killing coordinates.

    Generators are vectors in the (ψ, φ) plane (or (τ, σ) for Carter).
    """

    model_config = ConfigDict(frozen=True)

    generators: Tuple[Tuple[float, float], Tuple[float, float]]
    source: str = "explicit"

    @classmethod
    def rectangular(cls, delta_phi: float, delta_psi: float) -> "PeriodLattice":
        return cls(generators=((delta_psi, 0.0), (0.0, delta_phi)), source="rectangular")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.generators, dtype=float).T

    @property
    def area(self) -> float:
        return abs(float(np.linalg.det(self.matrix)))

    def closing_parameter(self, vector: Sequence[float]) -> Optional[float]:
        """Smallest s > 0 with s·vector in the lattice, or None (irrational twist)."""
        coords = np.linalg.solve(self.matrix, np.asarray(vector, dtype=float))
        c1, c2 = float(coords[0]), float(coords[1])
        tiny = 1e-12 * max(abs(c1), abs(c2))
        if abs(c1) <= tiny:
            return 1.0 / abs(c2)
        if abs(c2) <= tiny:
            return 1.0 / abs(c1)
        ratio = c2 / c1
        approx = Fraction(ratio).limit_denominator(config.lattice_search_bound)
        if abs(float(approx) - ratio) > 1e-9 * max(1.0, abs(ratio)):
            return None
        return approx.denominator / abs(c1)


Periods = Union[None, str, Tuple[float, float], PeriodLattice]


class ConeData(BaseModel):
    root: float
    which: Literal["P", "Q"]
    generator: Tuple[float, float]
    twist: float
    angle_coefficient: float
    required_period: float
    actual_period: Optional[float] = None
    angle: Optional[float] = None
    nominal_angle: float
    smooth: bool
    irrational_twist: bool = False


class BulkEndReport(BaseModel):
    kind: Literal["cone", "cusp", "smooth_axis", "boundary_end"]
    location: float
    which: Optional[Literal["P", "Q"]] = None
    angle: Optional[float] = None
    coefficient: Optional[float] = None
    smooth: bool = False
    verified: Optional[bool] = None
    model_parameters: Dict[str, Any] = Field(default_factory=dict)


class NeckSample(BaseModel):
    eps: float
    center: float
    partner: float
    location: float
    min_circumference: float
    shape_ratio: float


# Lattice helpers


def resolve_periods(params, periods: Periods) -> Optional[PeriodLattice]:
    if periods is None:
        return None
    if isinstance(periods, PeriodLattice):
        return periods
    if isinstance(periods, str):
        if periods != "auto":
            raise ValueError(f"unknown period convention {periods!r}")
        try:
            return auto_period_lattice(params)
        except PreconditionViolated as exc:
            logger.warning(f"automatic periods unavailable ({exc}); using nominal periods")
            return None
    delta_phi, delta_psi = periods
    return PeriodLattice.rectangular(float(delta_phi), float(delta_psi))


def _rod_roots(params) -> Tuple[float, str, float, str]:
    """The two rods bounding the first admissible component."""
    family = get_family(params)
    components = admissible_intervals(params)
    if not components:
        raise PreconditionViolated("admissible-interval", f"no admissible component for {params!r}")
    comp = components[0]
    if family.is_toric:
        return comp.lo, "P", comp.hi, "Q"
    q_roots = roots(family.Q).real_roots_sorted
    if not q_roots:
        raise PreconditionViolated("bolt", "𝒬 has no real root")
    return comp.lo, "P", q_roots[-1], "Q"


def auto_period_lattice(params) -> PeriodLattice:
    """Lattice making both rods of the first component smooth.

    Each rod generator V with |F'| at its root must close after 4π/|F'|.

    Raises:
        PreconditionViolated: a rod root is not simple, or the two rod
            generators are parallel
    """
    family = get_family(params)
    x1, w1, y2, w2 = _rod_roots(params)
    gens = []
    for root, which in ((x1, w1), (y2, w2)):
        poly = family.polynomial(which)
        if roots(poly).multiplicity_at(root) != 1:
            raise PreconditionViolated("simple-rod-roots", f"{which} root {root!r} is not simple")
        slope = abs(float(poly.derivative()(root)))
        vector, _ = family.killing_generator(root, which)
        gens.append(tuple(float(v) for v in (4.0 * math.pi / slope) * vector))
    det = gens[0][0] * gens[1][1] - gens[0][1] * gens[1][0]
    scale = math.hypot(*gens[0]) * math.hypot(*gens[1])
    if abs(det) <= 1e-9 * scale:
        raise PreconditionViolated(
            "independent-rod-generators", f"rod generators at {x1!r} and {y2!r} are parallel"
        )
    return PeriodLattice(generators=(gens[0], gens[1]), source="auto")


# Cone angles


def _component_of(params, t: float) -> AdmissibleComponent:
    comps = admissible_intervals(params)
    tol = 1e-9 * (1.0 + abs(t))
    for comp in comps:
        if comp.lo - tol <= t <= comp.hi + tol:
            return comp
    if not comps:
        raise PreconditionViolated("admissible-interval", f"no admissible component for {params!r}")
    return min(comps, key=lambda c: min(abs(c.lo - t), abs(c.hi - t)))


def generic_partners(params, root: float, which: str) -> List[float]:
    """Values of the other coordinate at 25/50/75% of the admissible range."""
    family = get_family(params)
    if not family.is_toric and which == "P":
        q0, q1 = carter_q_range(params)
        return [q0 + f * (q1 - q0) for f in PARTNER_FRACTIONS]
    if not family.is_toric:
        comp = admissible_intervals(params)[0]
        return [comp.lo + f * comp.length for f in PARTNER_FRACTIONS]
    comp = _component_of(params, root)
    end = comp.hi if which == "P" else comp.lo
    return [root + f * (end - root) for f in PARTNER_FRACTIONS]


def cone_angle(params, root: float, which: str, periods: Periods = None) -> ConeData:
    """Cone angle of the rod {which = root}.

    The angle coefficient is |F'(root)|/(2 twist) with twist = 1 + a²root⁴,
    and the angle is that coefficient times the period of the rotated angle
    coordinate induced by ``periods``.

    Raises:
        NotSimpleRoot: root is not a simple root of the polynomial
        DegenerateLocus: 1 − a²root²t² vanishes at a sampled partner t
    """
    family = get_family(params)
    poly = family.polynomial(which)
    mult = roots(poly).multiplicity_at(root)
    if mult != 1:
        raise NotSimpleRoot(f"{which}({root!r}) has multiplicity {mult}")
    if family.is_toric and family.rotation:
        for t in generic_partners(params, root, which):
            if abs(1.0 - (root * t) ** 2) < config.domain_floor:
                raise DegenerateLocus(f"1 - x²y² vanishes at ({root!r}, {t!r})")

    slope = abs(float(poly.derivative()(root)))
    vector, twist = family.killing_generator(root, which)
    coef = slope / (2.0 * twist)
    lattice = resolve_periods(params, periods)
    if lattice is None:
        closing: Optional[float] = TWO_PI / twist
    else:
        closing = lattice.closing_parameter(vector)

    if closing is None:
        logger.info(f"irrational twist for the {which}-rod at {root!r}")
        actual = angle = None
        smooth = False
    else:
        actual = twist * closing
        angle = coef * actual
        smooth = math.isclose(angle, TWO_PI, rel_tol=1e-9)
    return ConeData(
        root=root,
        which=which,
        generator=(float(vector[0]), float(vector[1])),
        twist=twist,
        angle_coefficient=coef,
        required_period=TWO_PI / coef,
        actual_period=actual,
        angle=angle,
        nominal_angle=TWO_PI * coef,
        smooth=smooth,
        irrational_twist=closing is None,
    )


def smoothness_check(params, interval: Tuple[float, float], periods: Periods) -> bool:
    """True iff both rods of ``interval`` are smooth for the given periods.

    Raises:
        PreconditionViolated: with the failed clause
    """
    family = get_family(params)
    if not family.is_toric:
        raise PreconditionViolated("toric-family", "smoothness_check needs a PD-form family")
    x1, y2 = float(interval[0]), float(interval[1])
    if not x1 < y2:
        raise PreconditionViolated("interval-order", f"need x1 < y2, got ({x1!r}, {y2!r})")
    inner = np.linspace(x1, y2, 35)[1:-1]
    if not all(float(family.P(t)) > 0.0 and float(family.Q(t)) < 0.0 for t in inner):
        raise PreconditionViolated("signs", f"P > 0 > Q fails inside ({x1!r}, {y2!r})")
    if roots(family.P).multiplicity_at(x1) != 1:
        raise PreconditionViolated("simple-root-P", f"{x1!r} is not a simple root of P")
    if roots(family.Q).multiplicity_at(y2) != 1:
        raise PreconditionViolated("simple-root-Q", f"{y2!r} is not a simple root of Q")
    if family.rotation:
        corners = (x1 * x1, x1 * y2, y2 * y2)
        lo, hi = min(corners) - config.domain_floor, max(corners) + config.domain_floor
        if lo <= 1.0 <= hi or lo <= -1.0 <= hi:
            raise PreconditionViolated(
                "corner-square", f"1 - x²y² vanishes on [{x1!r}, {y2!r}]²"
            )
    first = cone_angle(params, x1, "P", periods)
    second = cone_angle(params, y2, "Q", periods)
    logger.debug(f"rod angles {first.angle!r}, {second.angle!r}")
    return first.smooth and second.smooth


# Geometry along radial paths


def _point(which: str, u: float, partner: float) -> Tuple[float, float]:
    return (u, partner) if which == "P" else (partner, u)


def _deflate(poly: Quartic, root: float, times: int) -> np.ndarray:
    coeffs = np.asarray(poly.coeffs, dtype=float)
    for _ in range(times):
        coeffs, _ = npoly.polydiv(coeffs, [-root, 1.0])
    return coeffs


def _killing_circumference(params, vector, closing: float, point) -> float:
    g = metric_values(params, point)[:2, :2]
    v = np.asarray(vector, dtype=float)
    return closing * math.sqrt(max(float(v @ g @ v), 0.0))


def circumference_ratio(
    params,
    root: float,
    which: str,
    periods: Periods = None,
    deltas: Optional[Sequence[float]] = None,
    partner: Optional[float] = None,
) -> List[Dict[str, float]]:
    """Circumference of small rod circles divided by 2π times their radius.

    The radius is the metric distance to the rod, integrated with the
    substitution u = root + σs², which removes the 1/√ singularity.
    """
    family = get_family(params)
    poly = family.polynomial(which)
    if partner is None:
        partner = generic_partners(params, root, which)[1]
    vector, twist = family.killing_generator(root, which)
    lattice = resolve_periods(params, periods)
    closing = TWO_PI / twist if lattice is None else lattice.closing_parameter(vector)
    if closing is None:
        raise PreconditionViolated("rational-twist", f"{which}-rod at {root!r} never closes")
    if deltas is None:
        deltas = np.logspace(-7, -4, 5)

    if family.is_toric:
        sigma = 1.0 if which == "P" else -1.0
    elif which == "P":
        comp = _component_of(params, root)
        sigma = 1.0 if abs(root - comp.lo) <= abs(root - comp.hi) else -1.0
    else:
        sigma = 1.0
    quotient = _deflate(poly, root, 1)

    def integrand(s: float) -> float:
        u = root + sigma * s * s
        numerator = family.radial_numerator(u, which, partner)
        return 2.0 * math.sqrt(numerator / abs(npoly.polyval(u, quotient)))

    rows = []
    for delta in deltas:
        radius, _ = integrate.quad(integrand, 0.0, math.sqrt(delta), epsabs=0.0, epsrel=1e-12)
        point = _point(which, root + sigma * delta, partner)
        circ = _killing_circumference(params, vector, closing, point)
        rows.append({"delta": float(delta), "radius": radius, "ratio": circ / (TWO_PI * radius)})
    return rows


def _double_root_side(family: MetricFamily, root: float, which: Optional[str]) -> str:
    candidates = [which] if which else ["P", "Q"]
    for w in candidates:
        if roots(family.polynomial(w)).multiplicity_at(root) == 2:
            return w
    raise NotDoubleRoot(f"{root!r} is not a double root of {' or '.join(candidates)}")


def _cusp_partner(params, family: MetricFamily, root: float, which: str) -> Tuple[float, float]:
    """(partner, reference) for a path into the double root ``root``."""
    if family.is_toric:
        comp = _component_of(params, root)
        if which == "P":
            partner = root + 0.5 * (comp.hi - root)
        else:
            partner = root - 0.5 * (root - comp.lo)
        return partner, 0.5 * (root + partner)
    comp = _component_of(params, root)
    above = [t for t in (*comp.junctions, comp.hi) if t > root + 1e-9]
    nxt = above[0] if above else comp.lo
    q0, q1 = carter_q_range(params)
    return 0.5 * (q0 + q1), 0.5 * (root + nxt)


def cusp_model(params, double_root: float, which: Optional[str] = None) -> BulkEndReport:
    """Cusp at a double root, with the logarithmic length growth checked.

    The model coefficient is F''(x₁)/(2 twist²). The metric length of the
    path from x₁ ± δ to a fixed reference point must grow like K·(−log δ)
    with K = √(2N/|F''|), N the radial numerator at the root.

    Raises:
        NotDoubleRoot: the root does not have multiplicity exactly two
    """
    family = get_family(params)
    side = _double_root_side(family, double_root, which)
    poly = family.polynomial(side)
    second = float(poly.derivative(2)(double_root))
    if abs(second) < config.domain_floor:
        raise NotDoubleRoot(f"{side}'' vanishes at {double_root!r}")
    vector, twist = family.killing_generator(double_root, side)
    coefficient = second / (2.0 * twist**2)

    partner, reference = _cusp_partner(params, family, double_root, side)
    sigma = 1.0 if reference > double_root else -1.0
    span = abs(reference - double_root)
    quotient = _deflate(poly, double_root, 2)

    def integrand(v: float) -> float:
        u = double_root + sigma * math.exp(v)
        numerator = family.radial_numerator(u, side, partner)
        return math.sqrt(numerator / abs(npoly.polyval(u, quotient)))

    deltas = span * np.logspace(-2, -6, 5)
    lengths = [
        integrate.quad(integrand, math.log(d), math.log(span), epsabs=0.0, epsrel=1e-10)[0]
        for d in deltas
    ]
    slope = float(np.polyfit(-np.log(deltas), lengths, 1)[0])
    expected = math.sqrt(2.0 * family.radial_numerator(double_root, side, partner) / abs(second))

    closing = TWO_PI / twist
    points = [_point(side, double_root + sigma * d, partner) for d in deltas]
    circ = [_killing_circumference(params, vector, closing, p) for p in points]
    circ_exponent = float(np.polyfit(np.log(deltas), np.log(circ), 1)[0])
    verified = abs(slope - expected) <= 0.05 * expected and abs(circ_exponent - 1.0) <= 0.05
    logger.debug(
        f"cusp at {double_root!r}: length slope {slope:.6g} vs {expected:.6g}, "
        f"circumference exponent {circ_exponent:.4f}"
    )
    return BulkEndReport(
        kind="cusp",
        location=double_root,
        which=side,
        coefficient=coefficient,
        smooth=False,
        verified=verified,
        model_parameters={
            "second_derivative": second,
            "twist": twist,
            "partner": partner,
            "length_slope": slope,
            "expected_slope": expected,
            "circumference_exponent": circ_exponent,
        },
    )


# Cusp formation


def with_root_gap(params, eps: float, which: str = "P"):
    """Perturb a double root into a conjugate pair at distance ``eps`` from the axis.

    Raises:
        PreconditionViolated: the family has no root-gap parametrisation
    """
    if isinstance(params, CMetricParams):
        mu = params.mu
        inner = mu * (1.0 - mu * eps * eps)
        if mu <= 0.0 or inner < 0.0:
            raise PreconditionViolated("root-gap", f"no gap {eps!r} at mu={mu!r}")
        if which == "P":
            nu = 2.0 * math.sqrt(inner)
        else:
            nu = mu - 2.0 * math.sqrt(inner)
        return CMetricParams(mu=mu, nu=nu)
    if isinstance(params, NakedParams):
        return params.model_copy(update={"alpha3": eps * eps})
    if isinstance(params, CarterRootsParams):
        return params.model_copy(update={"eps": eps})
    raise PreconditionViolated("root-gap-family", f"no root-gap path for family {params.family!r}")


def _pair_center(poly: Quartic, near: float) -> float:
    structure = roots(poly)
    pairs = structure.complex_pairs
    if pairs:
        return min(pairs, key=lambda z: abs(z.real - near)).real
    real = structure.real_roots_sorted
    if not real:
        return near
    return min(real, key=lambda r: abs(r - near))


def neck_profile(
    params, near_root: float, eps_list: Sequence[float], which: str = "P"
) -> List[NeckSample]:
    """Minimal circle circumference near a root opened up by each ε.

    The circle is the orbit of the rod generator at the pair center, with
    nominal period, at a fixed partner value halfway to the far end.
    """
    samples = []
    for eps in eps_list:
        perturbed = with_root_gap(params, float(eps), which)
        family = get_family(perturbed)
        center = _pair_center(family.polynomial(which), near_root)
        comp = _component_of(perturbed, center)
        if family.is_toric:
            end = comp.hi if which == "P" else comp.lo
            partner = center + 0.5 * (end - center)
        else:
            q0, q1 = carter_q_range(perturbed)
            partner = 0.5 * (q0 + q1)
        window = 0.25 * abs(partner - center) if family.is_toric else 0.25 * comp.length
        vector, twist = family.killing_generator(center, which)
        closing = TWO_PI / twist

        def circumference(u: float) -> float:
            return _killing_circumference(perturbed, vector, closing, _point(which, u, partner))

        best = optimize.minimize_scalar(
            circumference,
            bounds=(center - window, center + window),
            method="bounded",
            options={"xatol": float(eps) * 1e-3},
        )
        at_min = float(best.fun)
        side = 0.5 * (circumference(best.x - eps) + circumference(best.x + eps))
        samples.append(
            NeckSample(
                eps=float(eps),
                center=center,
                partner=partner,
                location=float(best.x),
                min_circumference=at_min,
                shape_ratio=side / at_min if at_min > 0.0 else math.inf,
            )
        )
        logger.debug(f"neck eps={eps!r}: min circumference {at_min:.6g} at {best.x:.9g}")
    return samples


# Bulk ends


def _rod_end(params, root: float, which: str, periods: Periods) -> BulkEndReport:
    cone = cone_angle(params, root, which, periods)
    return BulkEndReport(
        kind="smooth_axis" if cone.smooth else "cone",
        location=root,
        which=which,
        angle=cone.angle,
        coefficient=cone.angle_coefficient,
        smooth=cone.smooth,
        model_parameters={
            "nominal_angle": cone.nominal_angle,
            "required_period": cone.required_period,
            "irrational_twist": cone.irrational_twist,
        },
    )


def _end_at(
    params, family: MetricFamily, root: float, which: str, periods: Periods
) -> BulkEndReport:
    mult = roots(family.polynomial(which)).multiplicity_at(root)
    if mult == 1:
        return _rod_end(params, root, which, periods)
    if mult == 2:
        return cusp_model(params, root, which)
    return BulkEndReport(
        kind="boundary_end", location=root, which=which, model_parameters={"multiplicity": mult}
    )


def bulk_ends(params, periods: Periods = None) -> Dict[str, Any]:
    """Every bulk end of the admissible components.

    Returns:
        {"ends": [BulkEndReport...], "smooth": bool, "lattice": generators or None}
    """
    family = get_family(params)
    lattice = resolve_periods(params, periods)
    ends: List[BulkEndReport] = []
    for comp in admissible_intervals(params):
        if family.is_toric:
            ends.append(_end_at(params, family, comp.lo, "P", lattice))
            for j in comp.junctions:
                side = "P" if roots(family.P).multiplicity_at(j) == 2 else "Q"
                ends.append(cusp_model(params, j, side))
            ends.append(_end_at(params, family, comp.hi, "Q", lattice))
        else:
            ends.append(_end_at(params, family, comp.lo, "P", lattice))
            ends.extend(cusp_model(params, j, "P") for j in comp.junctions)
            ends.append(_end_at(params, family, comp.hi, "P", lattice))
    if not family.is_toric:
        q_roots = roots(family.Q).real_roots_sorted
        if q_roots:
            ends.append(_end_at(params, family, q_roots[-1], "Q", lattice))
    smooth = bool(ends) and all(e.kind in ("smooth_axis", "boundary_end") for e in ends)
    return {
        "ends": [e.model_dump() for e in ends],
        "smooth": smooth,
        "lattice": None if lattice is None else [list(g) for g in lattice.generators],
    }
