"""Levi-Civita curvature pipeline on top of exact metric jets.

Christoffel symbols use the gradient slots of the jets and the Riemann
tensor uses the Hessian slots, so no numerical differentiation is involved.
All tensors are stored with lower indices in the coordinate chart; norms and
eigenvalues are taken in the orthonormal frame obtained by Gram–Schmidt on
the coordinate coframe in chart order.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..utils.config import config
from .errors import SingularMetric
from .polyfam import CMetricParams, MetricEval, NakedParams, PDParams, get_family

logger = logging.getLogger(__name__)

_R2 = 1.0 / math.sqrt(2.0)


@dataclass
class CurvatureData:
    """Curvature of a metric at one point.

    ``weyl_sd``/``weyl_asd`` are the Weyl operator blocks on the ±1
    eigenspaces of the Hodge star (dimension 4 only). Eigenvalues are listed
    simple-first: the entry of largest magnitude, then the remaining two.
    """

    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: Optional[np.ndarray]
    weyl_sd: Optional[np.ndarray]
    weyl_asd: Optional[np.ndarray]
    weyl_sd_eigs: Optional[np.ndarray]
    weyl_asd_eigs: Optional[np.ndarray]
    riem_norm_sq: float
    weyl_norm_sq: Optional[float]
    frame: np.ndarray

    @property
    def dimension(self) -> int:
        return self.ricci.shape[0]

    def to_dict(self) -> Dict:
        return {
            "dimension": self.dimension,
            "scalar": self.scalar,
            "ricci": self.ricci,
            "riem_norm_sq": self.riem_norm_sq,
            "weyl_norm_sq": self.weyl_norm_sq,
            "weyl_sd_eigs": self.weyl_sd_eigs,
            "weyl_asd_eigs": self.weyl_asd_eigs,
            "sectional_curvatures": sectional_curvatures(self),
        }


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Lower-triangular E with E g Eᵀ = I (Gram–Schmidt in chart order).

    Raises:
        SingularMetric: g singular or not positive definite
    """
    det = float(np.linalg.det(g))
    if not abs(det) >= config.domain_floor:
        raise SingularMetric(f"metric determinant {det!r} below floor")
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"metric is not positive definite: {exc}") from exc
    return np.linalg.inv(chol)


def to_frame(tensor: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Components of a covariant tensor in the orthonormal frame."""
    out = tensor
    for axis in range(tensor.ndim):
        out = np.moveaxis(np.tensordot(frame, out, axes=([1], [axis])), 0, axis)
    return out


def _kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    return (
        np.einsum("ac,bd->abcd", h, k)
        + np.einsum("bd,ac->abcd", h, k)
        - np.einsum("ad,bc->abcd", h, k)
        - np.einsum("bc,ad->abcd", h, k)
    )


def _selfdual_basis() -> Tuple[List[np.ndarray], List[np.ndarray]]:
    def wedge(i: int, j: int) -> np.ndarray:
        m = np.zeros((4, 4))
        m[i, j], m[j, i] = 1.0, -1.0
        return m

    pairs = (((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)))
    plus = [_R2 * (wedge(*p) + wedge(*q)) for p, q in pairs]
    minus = [_R2 * (wedge(*p) - wedge(*q)) for p, q in pairs]
    return plus, minus


_SD_BASIS, _ASD_BASIS = _selfdual_basis()


def _operator_block(weyl_hat: np.ndarray, basis: List[np.ndarray]) -> np.ndarray:
    block = np.array(
        [[0.25 * np.einsum("ij,ijkl,kl", a, weyl_hat, b) for b in basis] for a in basis]
    )
    return 0.5 * (block + block.T)


def simple_first(eigs: np.ndarray) -> np.ndarray:
    """Reorder three eigenvalues so the one of largest magnitude comes first."""
    eigs = np.sort(np.asarray(eigs, dtype=float))
    k = int(np.argmax(np.abs(eigs)))
    rest = np.delete(eigs, k)
    return np.concatenate(([eigs[k]], rest))


def weyl_blocks(weyl: np.ndarray, frame: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    weyl_hat = to_frame(weyl, frame)
    return _operator_block(weyl_hat, _SD_BASIS), _operator_block(weyl_hat, _ASD_BASIS)


def curvature_at(m: MetricEval) -> CurvatureData:
    """Christoffel symbols, Riemann, Ricci, scalar and Weyl curvature.

    Args:
        m: Metric jets at a point

    Returns:
        CurvatureData with lower-index tensors in the chart of ``m``

    Raises:
        SingularMetric: value part singular or not positive definite
    """
    g, dg, ddg = m.arrays()
    n = g.shape[0]
    frame = orthonormal_frame(g)
    ginv = np.linalg.inv(g)

    # first kind: L[c, a, b] = Γ_{c,ab}
    L = 0.5 * (
        np.einsum("bca->cab", dg) + np.einsum("acb->cab", dg) - np.einsum("abc->cab", dg)
    )
    gamma = np.einsum("ec,cab->eab", ginv, L)

    riemann = 0.5 * (
        np.einsum("adbc->abcd", ddg)
        + np.einsum("bcad->abcd", ddg)
        - np.einsum("acbd->abcd", ddg)
        - np.einsum("bdac->abcd", ddg)
    )
    riemann += np.einsum("fbc,fad->abcd", L, gamma) - np.einsum("fbd,fac->abcd", L, gamma)

    ricci = np.einsum("ac,abcd->bd", ginv, riemann)
    ricci = 0.5 * (ricci + ricci.T)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))

    riem_hat = to_frame(riemann, frame)
    riem_norm_sq = float(np.sum(riem_hat**2))

    weyl = weyl_norm_sq = None
    sd = asd = sd_eigs = asd_eigs = None
    if n >= 3:
        weyl = (
            riemann
            - _kulkarni_nomizu(ricci, g) / (n - 2)
            + scalar / ((n - 1) * (n - 2)) * 0.5 * _kulkarni_nomizu(g, g)
        )
        weyl_norm_sq = float(np.sum(to_frame(weyl, frame) ** 2))
        if n == 4:
            sd, asd = weyl_blocks(weyl, frame)
            sd_eigs = simple_first(np.linalg.eigvalsh(sd))
            asd_eigs = simple_first(np.linalg.eigvalsh(asd))

    logger.debug(f"curvature at {m.point}: scalar={scalar:.12g}, |Rm|^2={riem_norm_sq:.12g}")
    return CurvatureData(
        christoffel=gamma,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        weyl=weyl,
        weyl_sd=sd,
        weyl_asd=asd,
        weyl_sd_eigs=sd_eigs,
        weyl_asd_eigs=asd_eigs,
        riem_norm_sq=riem_norm_sq,
        weyl_norm_sq=weyl_norm_sq,
        frame=frame,
    )


def einstein_residual(
    m: MetricEval, lam: float, curvature: Optional[CurvatureData] = None
) -> float:
    """Max-abs entry of Ric − Λg in the orthonormal frame."""
    c = curvature if curvature is not None else curvature_at(m)
    ric_hat = to_frame(c.ricci, c.frame)
    return float(np.max(np.abs(ric_hat - lam * np.eye(c.dimension))))


def weyl_split(c: CurvatureData, m: MetricEval) -> Tuple[np.ndarray, np.ndarray]:
    """Weyl operator on selfdual and anti-selfdual 2-forms.

    The volume form is +√det g dψ∧dφ∧dx∧dy (or dτ∧dσ∧dp∧dq) in chart order.
    """
    if c.weyl is None or c.dimension != 4:
        raise ValueError("the selfdual split needs a 4-dimensional metric")
    return weyl_blocks(c.weyl, orthonormal_frame(m.values()))


def sectional_curvatures(c: CurvatureData) -> List[float]:
    """Sectional curvatures of the coordinate-ordered orthonormal planes."""
    r = to_frame(c.riemann, c.frame)
    n = c.dimension
    return [float(r[i, j, i, j]) for i in range(n) for j in range(i + 1, n)]


def constant_curvature_residual(c: CurvatureData) -> Tuple[float, float]:
    """Best constant sectional curvature K and max|Rm − K(g⊙g)| in the frame."""
    n = c.dimension
    k = c.scalar / (n * (n - 1))
    eye = np.eye(n)
    model = k * (np.einsum("ac,bd->abcd", eye, eye) - np.einsum("ad,bc->abcd", eye, eye))
    residual = float(np.max(np.abs(to_frame(c.riemann, c.frame) - model)))
    return k, residual


def type_d_defect(eigs: np.ndarray) -> float:
    """|λ₂ − λ₃| relative to max|λ| for simple-first eigenvalues (0 when flat)."""
    top = float(np.max(np.abs(eigs)))
    if top == 0.0:
        return 0.0
    return abs(float(eigs[1] - eigs[2])) / top


def rotation_constants(params) -> Optional[Tuple[float, float]]:
    """(k₊, k₋) of a rotating PD-form family, or None for other families."""
    if isinstance(params, PDParams) and params.a == 1:
        return params.k_plus, params.k_minus
    if isinstance(params, NakedParams):
        coeffs = get_family(params).P.coeffs
        return 0.5 * (coeffs[3] + coeffs[1]), 0.5 * (coeffs[3] - coeffs[1])
    return None


def closed_form_riem_norm_sq(params, point: Tuple[float, float]) -> Optional[float]:
    """‖Rm‖² from the closed forms, or None where none is known.

    C-metric: 24 + 12μ²(x−y)⁶. Rotating PD-form families:
    24 + 24(x−y)⁶(k₊²/(1+xy)⁶ + k₋²/(1−xy)⁶).
    """
    x, y = point
    if isinstance(params, CMetricParams):
        return 24.0 + 12.0 * params.mu**2 * (x - y) ** 6
    constants = rotation_constants(params)
    if constants is None:
        return None
    k_plus, k_minus = constants
    return 24.0 + 24.0 * (x - y) ** 6 * (
        k_plus**2 / (1.0 + x * y) ** 6 + k_minus**2 / (1.0 - x * y) ** 6
    )
