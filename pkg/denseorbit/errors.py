from typing import Any, List, Optional


class DenseOrbitError(Exception):
    """Base class for all denseorbit errors"""


class DimensionMismatchError(DenseOrbitError, ValueError):
    pass


class NotRationalError(DenseOrbitError, ValueError):
    pass


class DegenerateFormError(DenseOrbitError, ValueError):
    pass


class SignatureError(DenseOrbitError, ValueError):
    pass


class NotContainedError(DenseOrbitError, ValueError):
    pass


class NotIntegralError(DenseOrbitError, ValueError):
    pass


class IsotropicVectorError(DenseOrbitError, ValueError):
    pass


class NotAnIsometryError(DenseOrbitError, ValueError):
    pass


class FixedPointError(DenseOrbitError, ValueError):
    """Raised when a boundary point is (numerically) fixed where it must not be"""


class DynamicsError(DenseOrbitError, ValueError):
    """Raised when an isometry has no attracting dynamics (identity, elliptic, reversing)"""


class RationalizationError(DenseOrbitError, ValueError):
    pass


class DegenerateConfigurationError(DenseOrbitError, ValueError):
    """Raised when a reduction stage collapses dimension (e.g. l lies in the dual plane)"""


class EmptyGeneratorSetError(DenseOrbitError, ValueError):
    pass


class UnknownPresetError(DenseOrbitError, KeyError):
    pass


class SearchExhaustedError(DenseOrbitError, RuntimeError):
    """Raised when a bounded search runs out of budget

    Args:
        message: Human readable diagnostic
        best: Best partial result found before the budget ran out, if any
    """

    def __init__(self, message: str, best: Optional[Any] = None):
        super().__init__(message)
        self.best = best


class SpecError(DenseOrbitError, ValueError):
    """Problem spec rejected; carries one diagnostic line per offending field"""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
