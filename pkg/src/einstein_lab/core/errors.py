"""Error taxonomy for einstein-lab.

Every error carries a stable machine ``code`` that the CLI prints in its
single-line error JSON.
"""

from typing import Optional, Tuple


class EinsteinLabError(Exception):
    """Base class for all toolkit errors."""

    code = "einstein_lab_error"


class DivisionByZero(EinsteinLabError, ZeroDivisionError):
    """Jet division by a value below the configured floor."""

    code = "division_by_zero"


class OutsideDomain(EinsteinLabError, ValueError):
    """Point violates the sign conventions of the admissible domain."""

    code = "outside_domain"


class DegenerateLocus(EinsteinLabError, ValueError):
    """Point lies on (or within the floor of) a degenerate locus of the metric."""

    code = "degenerate_locus"


class SingularMetric(EinsteinLabError, ArithmeticError):
    """Metric value part is singular or not positive definite."""

    code = "singular_metric"


class ZeroPolynomial(EinsteinLabError, ValueError):
    code = "zero_polynomial"


class DegenerateNormalization(EinsteinLabError, ValueError):
    """Normalising constant of the naked subfamily is undefined."""

    code = "degenerate_normalization"


class NotSimpleRoot(EinsteinLabError, ValueError):
    code = "not_simple_root"


class NotDoubleRoot(EinsteinLabError, ValueError):
    code = "not_double_root"


class PreconditionViolated(EinsteinLabError, ValueError):
    """A named precondition clause failed."""

    code = "precondition_violated"

    def __init__(self, clause: str, detail: Optional[str] = None):
        self.clause = clause
        message = clause if detail is None else f"{clause}: {detail}"
        super().__init__(message)


class UnrecognizedMultiplicityPattern(EinsteinLabError, ValueError):
    code = "unrecognized_multiplicity_pattern"

    def __init__(self, pattern: Tuple[int, int], endpoint: float):
        self.pattern = pattern
        self.endpoint = endpoint
        super().__init__(
            f"root multiplicities (P, Q) = {pattern} at {endpoint!r} match no model"
        )


class NonConvergence(EinsteinLabError, RuntimeError):
    code = "non_convergence"


class UsageError(EinsteinLabError, ValueError):
    """Malformed command line."""

    code = "usage"


__all__ = [
    "EinsteinLabError",
    "DivisionByZero",
    "OutsideDomain",
    "DegenerateLocus",
    "SingularMetric",
    "ZeroPolynomial",
    "DegenerateNormalization",
    "NotSimpleRoot",
    "NotDoubleRoot",
    "PreconditionViolated",
    "UnrecognizedMultiplicityPattern",
    "NonConvergence",
    "UsageError",
]
