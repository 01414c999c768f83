"""Quartic roots, multiplicities and the parameter-region geometry."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as npoly

from ..utils.config import config
from .errors import DegenerateLocus, OutsideDomain, PreconditionViolated, ZeroPolynomial
from .polyfam import CMetricParams, Quartic, get_family

logger = logging.getLogger(__name__)

CURVE_NAMES = ("nu=2sqrt(mu)", "nu=mu-2sqrt(mu)", "nu=2mu", "nu=-mu")
REGION_TOLERANCE = 1e-10


@dataclass(frozen=True)
class RootStructure:
    """Roots of a quartic with certified multiplicities.

    ``near_double`` lists pairs of distinct simple roots whose gap is below
    ``config.near_double_gap`` times the polynomial scale, as (center, gap).
    """

    roots: Tuple[Tuple[complex, int], ...]
    degree: int
    scale: float = 1.0
    near_double: Tuple[Tuple[complex, float], ...] = field(default=())

    @property
    def real_roots(self) -> List[Tuple[float, int]]:
        return sorted((r.real, m) for r, m in self.roots if r.imag == 0.0)

    @property
    def real_roots_sorted(self) -> List[float]:
        return [r for r, _ in self.real_roots]

    @property
    def complex_pairs(self) -> List[complex]:
        """Roots with positive imaginary part, one per conjugate pair."""
        return sorted((r for r, _ in self.roots if r.imag > 0.0), key=lambda z: (z.real, z.imag))

    def multiplicity_at(self, t: float, tol: Optional[float] = None) -> int:
        """Total multiplicity of the roots within ``tol`` of ``t``."""
        if tol is None:
            tol = 10.0 * config.pair_cluster_radius * self.scale
        return sum(m for r, m in self.roots if abs(r - t) <= tol)

    def to_dict(self) -> Dict:
        return {
            "degree": self.degree,
            "roots": [
                {"real": r.real, "imag": r.imag, "multiplicity": m}
                for r, m in sorted(self.roots, key=lambda e: (e[0].real, e[0].imag))
            ],
            "real_roots_sorted": self.real_roots_sorted,
            "near_double": [{"center": [c.real, c.imag], "gap": g} for c, g in self.near_double],
        }


def _polish(q: Quartic, dq: Quartic, z: complex) -> complex:
    real = z.imag == 0.0
    current = z.real if real else z
    residual = abs(q(current))
    for _ in range(config.newton_polish_steps):
        slope = dq(current)
        if slope == 0:
            break
        candidate = current - q(current) / slope
        new_residual = abs(q(candidate))
        if not new_residual < residual:
            break
        current, residual = candidate, new_residual
    return complex(current)


def _single_link(points: Sequence[complex], radius: float) -> List[List[int]]:
    groups: List[List[int]] = []
    for i in sorted(range(len(points)), key=lambda k: (points[k].real, points[k].imag)):
        joined = [g for g in groups if any(abs(points[i] - points[j]) <= radius for j in g)]
        merged = [i]
        for g in joined:
            merged.extend(g)
            groups.remove(g)
        groups.append(sorted(merged))
    return groups


def _refine_multiple(coeffs: np.ndarray, center: complex, m: int) -> complex:
    """Newton on the (m-1)-th derivative, where an m-fold root is simple."""
    d = npoly.polyder(coeffs, m - 1)
    dd = npoly.polyder(d)
    z = center.real if center.imag == 0.0 else center
    for _ in range(config.newton_polish_steps):
        slope = npoly.polyval(z, dd)
        if slope == 0:
            break
        step = npoly.polyval(z, d) / slope
        z = z - step
        if abs(step) <= 1e-16 * (1.0 + abs(z)):
            break
    if abs(z - center) > config.cluster_radius * (1.0 + abs(center)):
        return center
    return complex(z)


def _certified(coeffs: np.ndarray, center: complex, m: int) -> bool:
    """Derivative test: P(c), ..., P^(m-1)(c) vanish relative to their scale."""
    r = abs(center)
    for k in range(m):
        deriv = npoly.polyval(center, npoly.polyder(coeffs, k)) / math.factorial(k)
        size = sum(abs(c) * math.comb(j, k) * r ** (j - k) for j, c in enumerate(coeffs) if j >= k)
        if abs(deriv) > config.root_tolerance * size:
            return False
    return True


def roots(q: Quartic) -> RootStructure:
    """All roots of ``q`` with certified multiplicities.

    Companion-matrix eigenvalues are polished by Newton steps, clustered,
    and every cluster is accepted as a multiple root only when the
    derivative test passes, then re-centered by Newton on the derivative
    in which it is a simple root; otherwise its members stay simple.

    Raises:
        ZeroPolynomial: all coefficients vanish
    """
    c = np.asarray(q.coeffs, dtype=float)
    cmax = float(np.max(np.abs(c)))
    if cmax == 0.0:
        raise ZeroPolynomial("cannot take the roots of the zero polynomial")
    trimmed = npoly.polytrim(c, tol=1e-14 * cmax)
    degree = len(trimmed) - 1
    scale = q.scale
    if degree <= 0:
        return RootStructure(roots=(), degree=0, scale=scale)

    dq = q.derivative()
    raw = [complex(z) for z in np.atleast_1d(npoly.polyroots(trimmed))]
    polished = [_polish(q, dq, z) for z in raw]

    pair_radius = config.pair_cluster_radius * scale
    groups = _single_link(polished, pair_radius)
    wide = _single_link(polished, config.cluster_radius * scale)
    for g in wide:
        if len(g) >= 3 and not any(set(g) == set(h) for h in groups):
            groups = [h for h in groups if not set(h) <= set(g)] + [g]

    entries: List[Tuple[complex, int]] = []
    for g in groups:
        members = [polished[i] for i in g]
        center = complex(np.mean(members))
        if len(g) > 1 and abs(center.imag) <= pair_radius:
            center = complex(center.real, 0.0)
        if len(g) > 1 and _certified(trimmed, center, len(g)):
            center = _refine_multiple(trimmed, center, len(g))
            entries.append((center, len(g)))
        else:
            if len(g) > 1:
                logger.debug(f"cluster {members} failed the multiplicity test; kept simple")
            entries.extend((z, 1) for z in members)

    entries = _conjugate_pairs(entries)
    near = _near_doubles(entries, config.near_double_gap * scale)
    logger.debug(f"roots of {q!r}: {entries}")
    return RootStructure(roots=tuple(entries), degree=degree, scale=scale, near_double=near)


def _conjugate_pairs(entries: List[Tuple[complex, int]]) -> List[Tuple[complex, int]]:
    upper = [(z, m) for z, m in entries if z.imag > 0.0]
    lower = [(z, m) for z, m in entries if z.imag < 0.0]
    out = [(z, m) for z, m in entries if z.imag == 0.0]
    for z, m in upper:
        if not lower:
            out.append((complex(z.real, 0.0), m))
            continue
        k = min(range(len(lower)), key=lambda i: abs(lower[i][0] - z.conjugate()))
        w, _ = lower.pop(k)
        mid = 0.5 * (z + w.conjugate())
        out.extend([(mid, m), (mid.conjugate(), m)])
    out.extend((complex(w.real, 0.0), m) for w, m in lower)
    return sorted(out, key=lambda e: (e[0].real, e[0].imag))


def _near_doubles(entries, gap_limit: float) -> Tuple[Tuple[complex, float], ...]:
    simple = [z for z, m in entries if m == 1]
    found = []
    for i, z in enumerate(simple):
        for w in simple[i + 1 :]:
            gap = abs(z - w)
            if gap < gap_limit:
                found.append((0.5 * (z + w), gap))
    return tuple(found)


# C-metric parameter region


@dataclass(frozen=True)
class RegionVerdict:
    inside: bool
    boundary_curves_hit: Tuple[str, ...]
    distance_to_boundary: float
    nearest_curve: str
    real_parts_in_strip: bool

    def to_dict(self) -> Dict:
        return {
            "inside": self.inside,
            "boundary_curves_hit": list(self.boundary_curves_hit),
            "distance_to_boundary": self.distance_to_boundary,
            "nearest_curve": self.nearest_curve,
            "real_parts_in_strip": self.real_parts_in_strip,
        }


def region_curve_values(mu: float) -> Tuple[float, float, float, float]:
    root = math.sqrt(mu)
    return 2.0 * root, mu - 2.0 * root, 2.0 * mu, -mu


def _complex_parts_in_strip(mu: float, nu: float) -> bool:
    family = get_family(CMetricParams(mu=mu, nu=nu))
    for poly in (family.P, family.Q):
        pairs = roots(poly).complex_pairs
        if len(pairs) != 1 or not -1.0 < pairs[0].real < 0.0:
            return False
    return True


def cmetric_region(mu: float, nu: float) -> RegionVerdict:
    """Locate (μ, ν) relative to the admissible region of the C-metric.

    Inside means strictly between ν = μ − 2√μ and ν = 2√μ and strictly
    within max(ν/2, −ν) < μ; points within 1e−10 of a curve count as on it.

    Raises:
        PreconditionViolated: μ < 0
    """
    if mu < 0.0:
        raise PreconditionViolated("mu>=0", f"mu must be non-negative, got {mu!r}")
    upper_sqrt, lower_sqrt, upper_lin, lower_lin = region_curve_values(mu)
    values = (upper_sqrt, lower_sqrt, upper_lin, lower_lin)
    distances = [abs(nu - v) for v in values]
    hit = tuple(name for name, d in zip(CURVE_NAMES, distances) if d <= REGION_TOLERANCE)
    nearest = CURVE_NAMES[int(np.argmin(distances))]
    inside = (
        mu > 0.0
        and not hit
        and max(lower_sqrt, lower_lin) < nu < min(upper_sqrt, upper_lin)
    )
    strip = _complex_parts_in_strip(mu, nu) if mu > 0.0 else False
    return RegionVerdict(
        inside=inside,
        boundary_curves_hit=hit,
        distance_to_boundary=float(min(distances)),
        nearest_curve=nearest,
        real_parts_in_strip=strip,
    )


def region_scan(mu_values: Sequence[float], nu_values: Sequence[float]) -> pd.DataFrame:
    """Classify a (μ, ν) grid; columns mu, nu, inside, nearest_curve, distance."""
    rows = []
    for mu in mu_values:
        for nu in nu_values:
            verdict = cmetric_region(float(mu), float(nu))
            rows.append(
                {
                    "mu": float(mu),
                    "nu": float(nu),
                    "inside": verdict.inside,
                    "nearest_curve": verdict.nearest_curve,
                    "distance": verdict.distance_to_boundary,
                }
            )
    return pd.DataFrame(rows, columns=["mu", "nu", "inside", "nearest_curve", "distance"])


def region_curves(mu_values: Sequence[float]) -> pd.DataFrame:
    """The four boundary curves sampled at the given μ values."""
    rows = [
        {"mu": float(mu), **dict(zip(CURVE_NAMES, region_curve_values(float(mu))))}
        for mu in mu_values
    ]
    return pd.DataFrame(rows, columns=["mu", *CURVE_NAMES])


def carter_double_root_constraints(p3: float, p4: float) -> bool:
    """True iff p₀ = −(p₃+p₄)/2 lies strictly between p₃ and p₄.

    Equivalent to p₃ < 0 < p₄ with |p₃|/3 < |p₄| < 3|p₃|.
    """
    if not p3 < p4:
        raise PreconditionViolated("p3<p4", f"need p3 < p4, got ({p3!r}, {p4!r})")
    p0 = -0.5 * (p3 + p4)
    return p3 < p0 < p4


# Admissible intervals


@dataclass(frozen=True)
class AdmissibleComponent:
    """Connected component (lo, hi) of the admissible diagonal.

    ``junctions`` are interior roots of even multiplicity where the
    polynomials touch zero without changing sign.
    """

    lo: float
    hi: float
    junctions: Tuple[float, ...] = ()

    @property
    def regions(self) -> List[Tuple[float, float]]:
        cuts = [self.lo, *self.junctions, self.hi]
        return list(zip(cuts[:-1], cuts[1:]))

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> Dict:
        return {"lo": self.lo, "hi": self.hi, "junctions": list(self.junctions)}


def snap_to_unit(t: float, scale: float = 1.0) -> float:
    """±1 when ``t`` lies within the multiplicity radius of it, else ``t``."""
    if abs(abs(t) - 1.0) <= 10.0 * config.pair_cluster_radius * scale:
        return math.copysign(1.0, t)
    return t


def diagonal_breakpoints(family) -> List[float]:
    points = set(roots(family.P).real_roots_sorted)
    if family.is_toric:
        points.update(roots(family.Q).real_roots_sorted)
        if family.rotation:
            # the solver leaves roots at ±1 off by ~1e-11
            points = {snap_to_unit(t) for t in points} | {-1.0, 1.0}
    return sorted(points)


def _diagonal_ok(family, t: float) -> bool:
    if family.is_toric:
        return (
            float(family.P(t)) > 0.0
            and float(family.Q(t)) < 0.0
            and 1.0 - family.rotation * t**4 > 0.0
        )
    return float(family.P(t)) < 0.0


def admissible_intervals(params) -> List[AdmissibleComponent]:
    """Bounded components of the admissible set on the diagonal.

    Toric families: {P > 0, Q < 0, 1 − a²t⁴ > 0}. Carter–Plebański: {𝒫 < 0}.
    """
    family = get_family(params)
    cuts = diagonal_breakpoints(family)
    pieces = [
        (lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:]) if _diagonal_ok(family, 0.5 * (lo + hi))
    ]
    components: List[AdmissibleComponent] = []
    for lo, hi in pieces:
        if components and components[-1].hi == lo:
            last = components[-1]
            components[-1] = AdmissibleComponent(last.lo, hi, last.junctions + (lo,))
        else:
            components.append(AdmissibleComponent(lo, hi))
    if cuts:
        for end, outside in ((cuts[0], cuts[0] - 1.0), (cuts[-1], cuts[-1] + 1.0)):
            if _diagonal_ok(family, outside):
                logger.debug(f"unbounded admissible piece beyond {end} ignored")
    return components


def carter_q_range(
    params, components: Optional[List[AdmissibleComponent]] = None, pad: float = 0.1
) -> Tuple[float, float]:
    """Range of q past the bolt where 𝒬 > 0 and q > |p| on every p-component."""
    family = get_family(params)
    if components is None:
        components = admissible_intervals(params)
    reach = max((max(abs(c.lo), abs(c.hi)) for c in components), default=0.0)
    start = max([reach, *roots(family.Q).real_roots_sorted]) + pad
    return start, start + 2.0


def sample_admissible_points(
    params, n: int, seed: Optional[int] = None, margin: float = 0.02
) -> List[Tuple[float, float]]:
    """Seeded random admissible bulk points.

    Raises:
        PreconditionViolated: no bounded admissible component
    """
    components = admissible_intervals(params)
    if not components:
        raise PreconditionViolated("admissible-interval", f"no admissible component for {params!r}")
    family = get_family(params)
    rng = np.random.default_rng(config.default_seed if seed is None else seed)
    weights = np.array([c.length for c in components])
    weights = weights / weights.sum()

    q_start = 0.0 if family.is_toric else carter_q_range(params, components)[0]

    points: List[Tuple[float, float]] = []
    attempts = 0
    while len(points) < n:
        attempts += 1
        if attempts > 200 * max(n, 1):
            raise PreconditionViolated(
                "admissible-sampling", f"rejection sampling stalled after {attempts} draws"
            )
        comp = components[int(rng.choice(len(components), p=weights))]
        pad = margin * comp.length
        if family.is_toric:
            u, v = np.sort(rng.uniform(comp.lo + pad, comp.hi - pad, size=2))
            if v - u < pad:
                continue
        else:
            u = rng.uniform(comp.lo + pad, comp.hi - pad)
            v = rng.uniform(q_start, q_start + 2.0)
        if any(abs(u - j) < pad or abs(v - j) < pad for j in comp.junctions):
            continue
        try:
            family.check_point(float(u), float(v))
        except (OutsideDomain, DegenerateLocus):
            continue
        points.append((float(u), float(v)))
    return points
