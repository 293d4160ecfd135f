"""Exception types raised across the package."""


class CrackfieldError(Exception):
    """Base class for all package-specific errors."""


class NonIntegralDivision(CrackfieldError):
    """Domain length is not an integer multiple of the cell size."""


class InvalidScenario(CrackfieldError):
    """Toughness scenario violates its invariants."""


class UnknownCase(CrackfieldError):
    """Requested preset id is not one of I..VII."""


class NoConvergence(CrackfieldError):
    """Iterative linear solve hit its iteration cap.

    Carries the iteration count and the last relative residual.
    """

    def __init__(self, iters, residual, message=None):
        self.iters = iters
        self.residual = residual
        super().__init__(
            message or f"no convergence after {iters} iterations (residual {residual:.3e})"
        )


class NoCrack(CrackfieldError):
    """No cell of the crack field reaches the tip-tracking threshold."""


class TipOutOfDomain(CrackfieldError):
    """Near-tip sampling window leaves the computational domain."""


class EmptyWindow(CrackfieldError):
    """Sampling window is empty (crack tip reached the right edge)."""


class RankDeficient(CrackfieldError):
    """Local polynomial fit has fewer samples than coefficients."""


class Degenerate(CrackfieldError):
    """Regression input carries no usable regressor mass (all X near zero)."""


class MissingReference(CrackfieldError):
    """Normalization reference for the J series is absent."""


class ParseError(CrackfieldError):
    """Config document is malformed.  Carries the offending line number."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(CrackfieldError):
    """Config field is missing or invalid.  Carries the field name."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid or missing config field: {field}")


class CorruptArchive(CrackfieldError):
    """Trajectory archive is incomplete or fails its checksums."""
