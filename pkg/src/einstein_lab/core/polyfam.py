"""Quartic pairs and metric evaluators for the Einstein families.

Every family is served by a :class:`MetricFamily` provider. Providers build
the polynomial pair (P, Q), check admissibility of a point and write the
metric components once, generically over floats and :class:`Jet2` values.
"""

from __future__ import annotations

import json
import logging
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from ..utils.config import config
from .errors import DegenerateLocus, DegenerateNormalization, OutsideDomain
from .jet2 import Jet2, lift_coordinate

logger = logging.getLogger(__name__)


class Quartic:
    """Real polynomial of degree at most four.

    ``coeffs`` are stored in ascending order (degree 0..4). An optional
    factored ``form`` is used for evaluation; it keeps values accurate next
    to multiple roots, where the expanded coefficients cancel.
    """

    __slots__ = ("coeffs", "_form")

    def __init__(self, coeffs: Sequence[float], form: Optional[Callable[[Any], Any]] = None):
        c = [float(v) for v in coeffs]
        if len(c) > 5:
            raise ValueError(f"a quartic has at most 5 coefficients, got {len(c)}")
        c.extend([0.0] * (5 - len(c)))
        self.coeffs: Tuple[float, float, float, float, float] = tuple(c)  # type: ignore[assignment]
        self._form = form

    def __call__(self, t):
        if self._form is not None:
            return self._form(t)
        c0, c1, c2, c3, c4 = self.coeffs
        return (((c4 * t + c3) * t + c2) * t + c1) * t + c0

    def derivative(self, order: int = 1) -> "Quartic":
        return Quartic(npoly.polyder(np.asarray(self.coeffs), order))

    @property
    def degree(self) -> int:
        nonzero = [i for i, c in enumerate(self.coeffs) if c != 0.0]
        return nonzero[-1] if nonzero else -1

    @property
    def scale(self) -> float:
        return 1.0 + max(abs(c) for c in self.coeffs)

    def __sub__(self, other: "Quartic") -> "Quartic":
        return Quartic([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __repr__(self) -> str:
        return f"Quartic({list(self.coeffs)!r})"


# Parameter sets


class _Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PDParams(_Params):
    """Plebański–Demiański family with rotation ``a`` in {0, 1}."""

    family: Literal["pd"] = "pd"
    a: Literal[0, 1] = 1
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 0.0

    @property
    def k_plus(self) -> float:
        return 0.5 * (self.c + self.e)

    @property
    def k_minus(self) -> float:
        return 0.5 * (self.c - self.e)


class CMetricParams(_Params):
    family: Literal["cmetric"] = "cmetric"
    mu: float = 0.0
    nu: float = 0.0


class CarterPlebanskiParams(_Params):
    family: Literal["carter"] = "carter"
    E: float = 0.0
    M: float = 0.0
    N: float = 0.0
    alpha: float = 0.0


class CarterRootsParams(_Params):
    """Carter–Plebański polynomial given by two real roots and a gap ``eps``."""

    family: Literal["carter-roots"] = "carter-roots"
    p3: float = -1.0
    p4: float = 1.0
    eps: float = 0.0

    @model_validator(mode="after")
    def _ordered_roots(self):
        if not self.p3 < self.p4:
            raise ValueError(f"need p3 < p4, got p3={self.p3}, p4={self.p4}")
        return self

    @property
    def p0(self) -> float:
        return -0.5 * (self.p3 + self.p4)


class NakedParams(_Params):
    """Subfamily of PD (a=1) parametrised by the roots of P."""

    family: Literal["naked"] = "naked"
    alpha1: float = -1.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    alpha4: float = 1.0

    @property
    def normalization_denominator(self) -> float:
        a1, a2, a3, a4 = self.alpha1, self.alpha2, self.alpha3, self.alpha4
        return -1.0 + a1 * a2 * a2 * a4 + a1 * a4 - 2.0 * a1 * a2 * a4 + a1 * a3 * a4

    @property
    def c_infinity(self) -> float:
        den = self.normalization_denominator
        if abs(den) < config.domain_floor:
            raise DegenerateNormalization(
                f"normalisation denominator {den!r} vanishes for {self.model_dump()}"
            )
        return 1.0 / den


FamilyParams = Annotated[
    Union[PDParams, CMetricParams, CarterPlebanskiParams, CarterRootsParams, NakedParams],
    Field(discriminator="family"),
]

_PARAMS_ADAPTER: TypeAdapter = TypeAdapter(FamilyParams)


def params_from_json(obj: Union[str, Dict[str, Any]]) -> Any:
    """Parse ``{"family": ..., "params": {...}}`` (or a flat dict) into params.

    Raises:
        pydantic.ValidationError: on unknown family, bad fields or JSON that is
            not an object
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    data = obj
    if isinstance(obj, dict) and isinstance(obj.get("params"), dict):
        data = {"family": obj.get("family"), **obj["params"]}
    return _PARAMS_ADAPTER.validate_python(data)


def params_to_json(params) -> Dict[str, Any]:
    return {"family": params.family, "params": params.model_dump(exclude={"family"})}


# Polynomial constructors


def pd_polynomials(params: PDParams) -> Tuple[Quartic, Quartic]:
    """P = bx⁴+cx³+dx²+ex+b+1 and Q = (b+1)y⁴+cy³+dy²+ey+b."""
    b, c, d, e = params.b, params.c, params.d, params.e
    return Quartic([b + 1.0, e, d, c, b]), Quartic([b, e, d, c, b + 1.0])


def cmetric_polynomials(params: CMetricParams) -> Tuple[Quartic, Quartic]:
    """P(x) = (1+x)(1+νx+μx²) and Q(y) = y(1+ν+(μ+ν)y+μy²)."""
    mu, nu = params.mu, params.nu
    P = Quartic(
        [1.0, 1.0 + nu, mu + nu, mu],
        form=lambda t: (1.0 + t) * (1.0 + nu * t + mu * t * t),
    )
    Q = Quartic(
        [0.0, 1.0 + nu, mu + nu, mu],
        form=lambda t: t * ((1.0 + nu) + (mu + nu) * t + mu * t * t),
    )
    return P, Q


def naked_polynomials(params: NakedParams) -> Tuple[Quartic, Quartic]:
    """P = C∞(x−α₁)((x−1+α₂)²+α₃)(x−α₄) and Q = P + y⁴ − 1.

    Raises:
        DegenerateNormalization: when the C∞ denominator vanishes
    """
    cinf = params.c_infinity
    a1, a3, a4 = params.alpha1, params.alpha3, params.alpha4
    h = 1.0 - params.alpha2

    coeffs = npoly.polymul(npoly.polymul([-a1, 1.0], [h * h + a3, -2.0 * h, 1.0]), [-a4, 1.0])
    p_coeffs = cinf * np.asarray(coeffs)

    def p_form(t):
        return cinf * (t - a1) * ((t - h) * (t - h) + a3) * (t - a4)

    def q_form(t):
        return p_form(t) + (t - 1.0) * (t + 1.0) * (t * t + 1.0)

    q_coeffs = p_coeffs + np.array([-1.0, 0.0, 0.0, 0.0, 1.0])
    return Quartic(p_coeffs, form=p_form), Quartic(q_coeffs, form=q_form)


def carter_polynomials(
    params: Union[CarterPlebanskiParams, CarterRootsParams]
) -> Tuple[Quartic, Quartic]:
    """Carter–Plebański pair; for the root form 𝒫 = 𝒬 with a gap ε at p₀."""
    if isinstance(params, CarterRootsParams):
        p3, p4, p0, eps = params.p3, params.p4, params.p0, params.eps
        coeffs = npoly.polymul(
            npoly.polymul([-p3, 1.0], [-p4, 1.0]), [p0 * p0 + eps * eps, -2.0 * p0, 1.0]
        )

        def form(t):
            return (t - p3) * (t - p4) * ((t - p0) * (t - p0) + eps * eps)

        P = Quartic(coeffs, form=form)
        return P, Quartic(coeffs, form=form)

    E2 = params.E * params.E
    P = Quartic([params.alpha, -2.0 * params.N, E2, 0.0, 1.0])
    Q = Quartic([params.alpha, -2.0 * params.M, E2, 0.0, 1.0])
    return P, Q


# Metric families


class MetricFamily(ABC):
    """Provider of the closed-form metric of one family."""

    chart: Tuple[str, ...] = ()
    boundary_chart: Tuple[str, ...] = ()
    rotation: int = 0

    def __init__(self, params):
        self.params = params
        self.logger = logging.getLogger(__name__)
        self.P, self.Q = self.polynomials()

    @property
    def name(self) -> str:
        return self.params.family

    @property
    def is_toric(self) -> bool:
        return True

    def polynomial(self, which: str) -> Quartic:
        if which == "P":
            return self.P
        if which == "Q":
            return self.Q
        raise ValueError(f"which must be 'P' or 'Q', got {which!r}")

    @abstractmethod
    def polynomials(self) -> Tuple[Quartic, Quartic]:
        """Return the polynomial pair (P, Q)."""

    @abstractmethod
    def check_point(self, u: float, v: float) -> None:
        """Raise OutsideDomain/DegenerateLocus unless (u, v) is admissible."""

    @abstractmethod
    def components(self, u, v) -> List[List[Any]]:
        """4×4 metric components at (u, v); u, v are floats or jets."""

    @abstractmethod
    def check_boundary_point(self, t: float) -> None:
        """Raise unless t is an admissible point of the conformal boundary."""

    @abstractmethod
    def boundary_components(self, t) -> List[List[Any]]:
        """3×3 components of the boundary metric at t."""

    @abstractmethod
    def boundary_det(self, t: float) -> float:
        """Determinant of the Killing block of the boundary metric."""

    @abstractmethod
    def killing_generator(self, root: float, which: str) -> Tuple[np.ndarray, float]:
        """Killing field vanishing on the rod {which = root} and its twist factor."""

    @abstractmethod
    def radial_numerator(self, root: float, which: str, partner: float) -> float:
        """Limit of |g_rr · F| at the rod, F the vanishing polynomial."""

    def boundary_admissible(self, t: float) -> bool:
        try:
            self.check_boundary_point(t)
        except (OutsideDomain, DegenerateLocus):
            return False
        return True

    def point_admissible(self, u: float, v: float) -> bool:
        try:
            self.check_point(u, v)
        except (OutsideDomain, DegenerateLocus):
            return False
        return True


class ToricFamily(MetricFamily):
    """PD-form metric in coordinates (ψ, φ, x, y)."""

    chart = ("psi", "phi", "x", "y")
    boundary_chart = ("psi", "phi", "x")

    def check_point(self, u: float, v: float) -> None:
        floor = config.domain_floor
        if not u < v:
            raise OutsideDomain(f"need x < y, got ({u!r}, {v!r})")
        if v - u < floor:
            raise DegenerateLocus(f"|x - y| = {v - u!r} below floor")
        Px, Qy = float(self.P(u)), float(self.Q(v))
        if abs(Px) < floor or abs(Qy) < floor:
            raise DegenerateLocus(f"P(x) = {Px!r}, Q(y) = {Qy!r} at a root")
        D = 1.0 - self.rotation * (u * v) ** 2
        if abs(D) < floor:
            raise DegenerateLocus(f"1 - x²y² = {D!r} below floor")
        if Px <= 0.0 or Qy >= 0.0:
            raise OutsideDomain(f"need P(x) > 0 > Q(y), got P={Px!r}, Q={Qy!r}")
        if D < 0.0:
            raise OutsideDomain(f"need 1 - x²y² > 0, got {D!r}")

    def components(self, x, y):
        P = self.P(x)
        Q = self.Q(y)
        d = x - y
        w = 1.0 / (d * d)
        if self.rotation:
            x2 = x * x
            y2 = y * y
            D = 1.0 - x2 * y2
            wD = w / D
            g00 = wD * (P * y2 * y2 - Q)
            g01 = wD * (Q * x2 - P * y2)
            g11 = wD * (P - Q * x2 * x2)
            g22 = w * D / P
            g33 = -w * D / Q
        else:
            g00 = -w * Q
            g01 = 0.0
            g11 = w * P
            g22 = w / P
            g33 = -w / Q
        return [
            [g00, g01, 0.0, 0.0],
            [g01, g11, 0.0, 0.0],
            [0.0, 0.0, g22, 0.0],
            [0.0, 0.0, 0.0, g33],
        ]

    def check_boundary_point(self, t: float) -> None:
        floor = config.domain_floor
        Pt, Qt = float(self.P(t)), float(self.Q(t))
        if abs(Pt) < floor or abs(Qt) < floor:
            raise DegenerateLocus(f"P = {Pt!r}, Q = {Qt!r} at x = {t!r}")
        D4 = 1.0 - self.rotation * t**4
        if abs(D4) < floor:
            raise DegenerateLocus(f"1 - x⁴ vanishes at x = {t!r}")
        if Pt <= 0.0 or Qt >= 0.0 or D4 < 0.0:
            raise OutsideDomain(f"x = {t!r} is not on the admissible boundary")

    def boundary_components(self, t):
        P = self.P(t)
        Q = self.Q(t)
        if self.rotation:
            t2 = t * t
            D4 = 1.0 - t2 * t2
            b00 = (P * t2 * t2 - Q) / D4
            b01 = t2 * (Q - P) / D4
            b11 = (P - Q * t2 * t2) / D4
            b22 = D4 * (1.0 / P - 1.0 / Q)
        else:
            b00 = -1.0 * Q
            b01 = 0.0
            b11 = P
            b22 = 1.0 / P - 1.0 / Q
        return [[b00, b01, 0.0], [b01, b11, 0.0], [0.0, 0.0, b22]]

    def boundary_det(self, t: float) -> float:
        return -float(self.P(t)) * float(self.Q(t))

    def killing_generator(self, root: float, which: str) -> Tuple[np.ndarray, float]:
        a = self.rotation
        twist = 1.0 + a * root**4
        if which == "P":
            return np.array([a * root * root, 1.0]), twist
        if which == "Q":
            return np.array([1.0, a * root * root]), twist
        raise ValueError(f"which must be 'P' or 'Q', got {which!r}")

    def radial_numerator(self, root: float, which: str, partner: float) -> float:
        D = 1.0 - self.rotation * (root * partner) ** 2
        return abs(D) / (root - partner) ** 2


class PDFamily(ToricFamily):
    def __init__(self, params: PDParams):
        self.rotation = params.a
        super().__init__(params)

    def polynomials(self):
        return pd_polynomials(self.params)


class CMetricFamily(ToricFamily):
    rotation = 0

    def polynomials(self):
        return cmetric_polynomials(self.params)


class NakedFamily(ToricFamily):
    rotation = 1

    def polynomials(self):
        return naked_polynomials(self.params)


class CarterFamily(MetricFamily):
    """Carter–Plebański metric in coordinates (τ, σ, p, q)."""

    chart = ("tau", "sigma", "p", "q")
    boundary_chart = ("tau", "sigma", "p")

    @property
    def is_toric(self) -> bool:
        return False

    def polynomials(self):
        return carter_polynomials(self.params)

    def check_point(self, u: float, v: float) -> None:
        floor = config.domain_floor
        S = u * u - v * v
        if abs(S) < floor:
            raise DegenerateLocus(f"p² - q² = {S!r} below floor")
        Pp, Qq = float(self.P(u)), float(self.Q(v))
        if abs(Pp) < floor or abs(Qq) < floor:
            raise DegenerateLocus(f"𝒫(p) = {Pp!r}, 𝒬(q) = {Qq!r} at a root")
        if Pp * S <= 0.0 or Qq * S >= 0.0:
            raise OutsideDomain(
                f"need sign 𝒫 = sign(p² - q²) = -sign 𝒬, got 𝒫={Pp!r}, 𝒬={Qq!r}, p²-q²={S!r}"
            )

    def components(self, p, q):
        Pp = self.P(p)
        Qq = self.Q(q)
        p2 = p * p
        q2 = q * q
        S = p2 - q2
        g00 = (Pp - Qq) / S
        g01 = (Pp * q2 - Qq * p2) / S
        g11 = (Pp * q2 * q2 - Qq * p2 * p2) / S
        g22 = S / Pp
        g33 = -1.0 * S / Qq
        return [
            [g00, g01, 0.0, 0.0],
            [g01, g11, 0.0, 0.0],
            [0.0, 0.0, g22, 0.0],
            [0.0, 0.0, 0.0, g33],
        ]

    def check_boundary_point(self, t: float) -> None:
        Pt = float(self.P(t))
        if abs(Pt) < config.domain_floor:
            raise DegenerateLocus(f"𝒫 vanishes at p = {t!r}")
        if Pt > 0.0:
            raise OutsideDomain(f"need 𝒫(p) < 0, got {Pt!r}")

    def boundary_components(self, t):
        Pt = self.P(t)
        t2 = t * t
        return [[1.0, t2, 0.0], [t2, t2 * t2 - Pt, 0.0], [0.0, 0.0, -1.0 / Pt]]

    def boundary_det(self, t: float) -> float:
        return -float(self.P(t))

    def killing_generator(self, root: float, which: str) -> Tuple[np.ndarray, float]:
        if which not in ("P", "Q"):
            raise ValueError(f"which must be 'P' or 'Q', got {which!r}")
        return np.array([root * root, -1.0]), 1.0

    def radial_numerator(self, root: float, which: str, partner: float) -> float:
        return abs(root * root - partner * partner)


class FamilyFactory:
    """Factory for metric family providers keyed by the ``family`` tag."""

    def __init__(self):
        self.families: Dict[str, type] = {
            "pd": PDFamily,
            "cmetric": CMetricFamily,
            "naked": NakedFamily,
            "carter": CarterFamily,
            "carter-roots": CarterFamily,
        }
        self.logger = logging.getLogger(__name__)

    def available(self) -> List[str]:
        return sorted(self.families)

    def create(self, params) -> MetricFamily:
        """Create the provider for a parameter set.

        Args:
            params: Any member of :data:`FamilyParams`

        Returns:
            MetricFamily instance
        """
        family_cls = self.families.get(params.family)
        if family_cls is None:
            raise ValueError(f"Unknown family: {params.family}")
        self.logger.debug(f"Creating {family_cls.__name__} for {params.model_dump()}")
        return family_cls(params)


# Global factory instance
family_factory = FamilyFactory()


@lru_cache(maxsize=512)
def get_family(params) -> MetricFamily:
    return family_factory.create(params)


def family_polynomials(params) -> Tuple[Quartic, Quartic]:
    family = get_family(params)
    return family.P, family.Q


# Metric evaluations


class MetricEval:
    """Symmetric matrix of jets at a point, with its chart.

    ``active_axes`` maps the jet slots (x, y) to coordinate indices; a slot
    mapped to ``None`` is unused (boundary metrics depend on one coordinate).
    """

    __slots__ = ("g", "chart", "point", "active_axes")

    def __init__(
        self,
        g: Tuple[Tuple[Jet2, ...], ...],
        chart: Tuple[str, ...],
        point: Tuple[float, ...],
        active_axes: Tuple[Optional[int], Optional[int]],
    ):
        self.g = g
        self.chart = chart
        self.point = point
        self.active_axes = active_axes

    @property
    def dimension(self) -> int:
        return len(self.g)

    def values(self) -> np.ndarray:
        return np.array([[e.value for e in row] for row in self.g])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.values())

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (g, ∂g, ∂∂g) with derivative indices last."""
        n = self.dimension
        g = np.zeros((n, n))
        dg = np.zeros((n, n, n))
        ddg = np.zeros((n, n, n, n))
        ax, ay = self.active_axes
        for i in range(n):
            for j in range(n):
                e = self.g[i][j]
                g[i, j] = e.value
                if ax is not None:
                    dg[i, j, ax] = e.dx
                    ddg[i, j, ax, ax] = e.dxx
                if ay is not None:
                    dg[i, j, ay] = e.dy
                    ddg[i, j, ay, ay] = e.dyy
                    if ax is not None:
                        ddg[i, j, ax, ay] = e.dxy
                        ddg[i, j, ay, ax] = e.dxy
        return g, dg, ddg


def as_jet_matrix(rows) -> Tuple[Tuple[Jet2, ...], ...]:
    return tuple(tuple(e if isinstance(e, Jet2) else Jet2.constant(e) for e in row) for row in rows)


def metric_at(params, point: Tuple[float, float]) -> MetricEval:
    """Exact jet evaluation of the family metric at an admissible point.

    Args:
        params: Family parameters
        point: (x, y) for toric families, (p, q) for Carter–Plebański

    Returns:
        MetricEval in the chart (ψ, φ, x, y) or (τ, σ, p, q)

    Raises:
        OutsideDomain: wrong polynomial signs or x ≥ y
        DegenerateLocus: point within the floor of a degenerate locus
    """
    family = get_family(params)
    u, v = float(point[0]), float(point[1])
    family.check_point(u, v)
    rows = family.components(lift_coordinate("x", u), lift_coordinate("y", v))
    return MetricEval(as_jet_matrix(rows), family.chart, (u, v), (2, 3))


def metric_values(params, point: Tuple[float, float]) -> np.ndarray:
    """Float metric matrix without admissibility checks."""
    family = get_family(params)
    return np.array(family.components(float(point[0]), float(point[1])), dtype=float)


def metric_at_fd(params, point: Tuple[float, float], step: float = 1e-4) -> MetricEval:
    """MetricEval whose derivatives come from central differences."""
    family = get_family(params)
    u, v = float(point[0]), float(point[1])
    family.check_point(u, v)
    h = step

    def f(du: float, dv: float) -> np.ndarray:
        return metric_values(params, (u + du, v + dv))

    c = f(0.0, 0.0)
    xp, xm, yp, ym = f(h, 0.0), f(-h, 0.0), f(0.0, h), f(0.0, -h)
    pp, pm, mp, mm = f(h, h), f(h, -h), f(-h, h), f(-h, -h)
    dx = (xp - xm) / (2.0 * h)
    dy = (yp - ym) / (2.0 * h)
    dxx = (xp - 2.0 * c + xm) / (h * h)
    dyy = (yp - 2.0 * c + ym) / (h * h)
    dxy = (pp - pm - mp + mm) / (4.0 * h * h)
    n = c.shape[0]
    rows = [
        [Jet2(c[i, j], dx[i, j], dy[i, j], dxx[i, j], dxy[i, j], dyy[i, j]) for j in range(n)]
        for i in range(n)
    ]
    return MetricEval(tuple(tuple(r) for r in rows), family.chart, (u, v), (2, 3))
