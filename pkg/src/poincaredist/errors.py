"""Semantic exception hierarchy and warning categories."""


class PoincaredistError(Exception):
    """Base class for all library errors."""


class DomainError(PoincaredistError):
    """A point lies outside the domain (or on a forbidden boundary)."""


class DegenerateQuadrupleError(PoincaredistError):
    """Quadruple points coincide within the degeneracy threshold."""


class CriticalPointError(PoincaredistError):
    """An operation requiring a positive derivative met a critical point."""


class ChainingError(PoincaredistError):
    """Composition stages do not chain: image of one stage is not the
    domain of the next within tolerance."""


class InverseConvergenceError(PoincaredistError):
    """Numerical inversion of a monotone map failed to converge."""


class DepthExhaustedError(PoincaredistError):
    """A dynamical scan ran past the available continued-fraction depth.

    When a closest-return scan stalls (mode locking), ``estimate`` carries
    the rational approximation from the deepest return found.
    """

    def __init__(self, message: str, estimate: float | None = None):
        self.estimate = estimate
        super().__init__(message)


class RationalRotationError(PoincaredistError):
    """The orbit closed up: rotation number is rational.

    Carries the detected period.
    """

    def __init__(self, period: int, message: str | None = None):
        self.period = period
        super().__init__(message or f"periodic orbit detected, period {period}")


class UnreachableTargetError(PoincaredistError):
    """A parameter search cannot reach the requested target."""


class SurrogateOverflowError(PoincaredistError):
    """A linear-fractional surrogate chain left its stage image.

    Carries the index of the offending stage.
    """

    def __init__(self, stage: int, message: str | None = None):
        self.stage = stage
        super().__init__(message or f"surrogate chain overflows at stage {stage}")


class ConfigError(PoincaredistError):
    """A run configuration could not be parsed or validated."""


class AccuracyRefusalError(PoincaredistError):
    """A request exceeded the trusted numerical depth and was not
    explicitly acknowledged."""


class GuardClampWarning(UserWarning):
    """A Poincare-line coordinate was clamped to the guarded range."""
