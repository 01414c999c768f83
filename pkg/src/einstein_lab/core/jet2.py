"""Second-order forward-mode jets in the two active coordinates (x, y).

A :class:`Jet2` carries a value together with its gradient and its Hessian
with respect to the two coordinates the metrics depend on. The Killing
coordinates never enter the metric components, so two slots suffice.
"""

from __future__ import annotations

from typing import Literal, Union

import numpy as np

from ..utils.config import config
from .errors import DivisionByZero

Number = Union[int, float]


class Jet2:
    """Value, gradient and Hessian of a scalar function of (x, y).

    The Hessian stores a single off-diagonal entry, so it is symmetric by
    construction.
    """

    __slots__ = ("value", "dx", "dy", "dxx", "dxy", "dyy")

    # numpy scalars defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(
        self,
        value: float,
        dx: float = 0.0,
        dy: float = 0.0,
        dxx: float = 0.0,
        dxy: float = 0.0,
        dyy: float = 0.0,
    ):
        self.value = float(value)
        self.dx = float(dx)
        self.dy = float(dy)
        self.dxx = float(dxx)
        self.dxy = float(dxy)
        self.dyy = float(dyy)

    @classmethod
    def constant(cls, value: Number) -> "Jet2":
        return cls(value)

    @property
    def grad(self) -> np.ndarray:
        return np.array([self.dx, self.dy])

    @property
    def hess(self) -> np.ndarray:
        return np.array([[self.dxx, self.dxy], [self.dxy, self.dyy]])

    @staticmethod
    def _coerce(other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet2(float(other))
        return NotImplemented

    # Addition and subtraction

    def __add__(self, other) -> "Jet2":
        if isinstance(other, (int, float)):
            return Jet2(self.value + other, self.dx, self.dy, self.dxx, self.dxy, self.dyy)
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Jet2(
            self.value + o.value,
            self.dx + o.dx,
            self.dy + o.dy,
            self.dxx + o.dxx,
            self.dxy + o.dxy,
            self.dyy + o.dyy,
        )

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.dx, -self.dy, -self.dxx, -self.dxy, -self.dyy)

    def __pos__(self) -> "Jet2":
        return self

    def __sub__(self, other) -> "Jet2":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "Jet2":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    # Multiplication

    def _scale(self, k: float) -> "Jet2":
        return Jet2(
            self.value * k, self.dx * k, self.dy * k, self.dxx * k, self.dxy * k, self.dyy * k
        )

    def __mul__(self, other) -> "Jet2":
        if isinstance(other, (int, float)):
            return self._scale(float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        f, g = self, o
        return Jet2(
            f.value * g.value,
            f.dx * g.value + f.value * g.dx,
            f.dy * g.value + f.value * g.dy,
            f.dxx * g.value + 2.0 * f.dx * g.dx + f.value * g.dxx,
            f.dxy * g.value + f.dx * g.dy + f.dy * g.dx + f.value * g.dxy,
            f.dyy * g.value + 2.0 * f.dy * g.dy + f.value * g.dyy,
        )

    __rmul__ = __mul__

    # Division

    def reciprocal(self) -> "Jet2":
        """Exact jet of 1/f.

        Raises:
            DivisionByZero: when |f| is below ``config.division_floor``
        """
        v = self.value
        if abs(v) < config.division_floor:
            raise DivisionByZero(f"division by a jet with value {v!r}")
        inv = 1.0 / v
        inv2 = inv * inv
        inv3 = inv2 * inv
        return Jet2(
            inv,
            -self.dx * inv2,
            -self.dy * inv2,
            2.0 * self.dx * self.dx * inv3 - self.dxx * inv2,
            2.0 * self.dx * self.dy * inv3 - self.dxy * inv2,
            2.0 * self.dy * self.dy * inv3 - self.dyy * inv2,
        )

    def __truediv__(self, other) -> "Jet2":
        if isinstance(other, (int, float)):
            if abs(other) < config.division_floor:
                raise DivisionByZero(f"division by {other!r}")
            return self._scale(1.0 / other)
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other) -> "Jet2":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, n: int) -> "Jet2":
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        n = int(n)
        if n < 0:
            return self.reciprocal() ** (-n)
        if n == 0:
            return Jet2(1.0)
        v = self.value
        d1 = n * v ** (n - 1)
        d2 = n * (n - 1) * v ** (n - 2) if n >= 2 else 0.0
        return Jet2(
            v**n,
            d1 * self.dx,
            d1 * self.dy,
            d2 * self.dx * self.dx + d1 * self.dxx,
            d2 * self.dx * self.dy + d1 * self.dxy,
            d2 * self.dy * self.dy + d1 * self.dyy,
        )

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return (
            f"Jet2(value={self.value!r}, grad=({self.dx!r}, {self.dy!r}), "
            f"hess=({self.dxx!r}, {self.dxy!r}, {self.dyy!r}))"
        )


def lift_coordinate(which: Literal["x", "y"], value: float) -> Jet2:
    """Jet of the coordinate function ``which`` at ``value``."""
    if which == "x":
        return Jet2(value, 1.0, 0.0)
    if which == "y":
        return Jet2(value, 0.0, 1.0)
    raise ValueError(f"unknown coordinate slot {which!r}")


def arithmetic(a: Jet2, b: Jet2, op: Literal["add", "sub", "mul", "div"]) -> Jet2:
    """Apply one of the four field operations to a pair of jets."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def value_of(z) -> float:
    """Value part of a jet or plain number."""
    return z.value if isinstance(z, Jet2) else float(z)
