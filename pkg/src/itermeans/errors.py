"""Exception hierarchy shared by every module and both compute backends."""


class ItermeansError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(ItermeansError):
    """Raised by the expression parser; carries the offending position."""

    def __init__(self, message, pos):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class UnknownIdentifierError(ItermeansError):
    """An identifier that is neither `x`, a keyword, nor a known parameter."""


class UnboundParameterError(ItermeansError):
    """Evaluation was attempted with named parameters still unbound."""


class DomainError(ItermeansError):
    """Evaluation left the positive half-line or produced a non-finite value."""


class BracketError(ItermeansError):
    """Root bracketing failed: the target value appears to escape the range."""


class ToleranceError(ItermeansError):
    """An iterative refinement stopped before reaching its tolerance."""


class SeriesError(ItermeansError):
    """Base class for inverse-iterate series failures."""


class SeriesDivergenceError(SeriesError):
    """The series of inverse iterates grows past the divergence cap, or the
    generator is not displaced above the identity so no sum can exist."""


class SeriesUndeterminedError(SeriesError):
    """The term cap was reached without certifying a geometric tail; the sum
    may diverge slowly or converge too slowly to certify."""


class HypothesesUnmetError(ItermeansError):
    """An invariance check was refused because the pointwise composition
    hypotheses of the identity do not hold for the supplied maps."""
