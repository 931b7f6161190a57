"""Exception hierarchy shared by every stlddp module."""


class StlDdpError(Exception):
    """Base class for all errors raised by stlddp."""


class SpecSyntaxError(StlDdpError):
    """Malformed specification text.

    Attributes:
        position: 1-based column of the offending token.
        expected: description of what the parser wanted instead.
    """

    def __init__(self, message: str, position: int, expected: str = ""):
        self.position = position
        self.expected = expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at column {position}{detail}")


class FragmentError(StlDdpError):
    """Formula lies outside the supported STL fragment."""


class UnknownPredicate(StlDdpError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class DimensionMismatch(StlDdpError, ValueError):
    pass


class HorizonExceeded(StlDdpError, ValueError):
    pass


class LengthMismatch(StlDdpError, ValueError):
    pass


class EmptyArgumentList(StlDdpError, ValueError):
    pass


class NonFiniteState(StlDdpError, FloatingPointError):
    """Rollout produced a NaN or infinite state.

    Attributes:
        timestep: first index at which the state stopped being finite.
    """

    def __init__(self, message: str, timestep: int):
        self.timestep = timestep
        super().__init__(f"{message} (first non-finite state at t={timestep})")


class NotPositiveDefinite(StlDdpError, ArithmeticError):
    """Regularized Q_uu failed a Cholesky factorization at some timestep."""

    def __init__(self, timestep: int):
        self.timestep = timestep
        super().__init__(f"Q_uu + reg*I is not positive definite at t={timestep}")


class SingularMassMatrix(StlDdpError, ArithmeticError):
    pass


class ConfigError(StlDdpError, ValueError):
    """Scenario file failed validation.

    Attributes:
        path: location of the bad entry, e.g. ``predicates.goal.lower``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        prefix = f"{path}: " if path else ""
        super().__init__(prefix + message)


class ParseError(StlDdpError, ValueError):
    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {message}")


class SoundnessViolation(StlDdpError, AssertionError):
    """A report claimed satisfaction while the exact robustness was not positive."""
