"""
Exception hierarchy shared by the geometry, verification and CLI layers
"""

from __future__ import annotations

from typing import Optional


class VerifierError(Exception):
    """Base class for every error raised by the verifier"""


# ===========================
# Expressions
# ===========================


class ExpressionError(VerifierError):
    """Problem with an expression source or tree"""


class ExpressionSyntaxError(ExpressionError):
    """Source text does not match the expression grammar"""

    def __init__(self, message: str, position: int, expected: str):
        self.message = message
        self.position = position
        self.expected = expected
        super().__init__(f"{message} at position {position} (expected {expected})")


class UnknownIdentifierError(ExpressionError):
    """Identifier is neither a declared variable nor a known function"""

    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier '{name}' at position {position}")


class EmptyExpressionError(ExpressionError):
    """Source text holds no expression"""


class EvaluationError(ExpressionError):
    """Evaluation failed on a specific subexpression"""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in '{subexpression}'")


class DivisionByZeroError(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


class MissingBindingError(EvaluationError):
    pass


# ===========================
# Manifolds and fields
# ===========================


class ManifoldError(VerifierError):
    """Invalid factor, product or point"""


class FactorSpecError(ManifoldError):
    pass


class PointOutsideBoxError(ManifoldError):
    pass


class DegenerateMetricError(ManifoldError):
    pass


class WarpingFunctionError(ManifoldError):
    pass


class SingularMetricError(VerifierError):
    """Metric determinant at or below the degeneracy threshold"""


class InvalidBlockPairError(VerifierError):
    pass


class UnstructuredFieldError(VerifierError):
    """Vector field does not split into per-factor blocks"""


# ===========================
# Verification and configuration
# ===========================


class InstanceKindError(VerifierError):
    pass


class MissingAuxiliaryDataError(VerifierError):
    pass


class ConfigError(VerifierError):
    """Run configuration problem tied to a JSON path"""

    def __init__(self, path: str, message: str, cause: Optional[Exception] = None):
        self.path = path
        self.cause = cause
        super().__init__(f"{path}: {message}")
