"""Exception hierarchy shared by all modules."""


class WeylError(Exception):
    """Base class for errors raised by weylore."""


class FieldMismatch(WeylError, TypeError):
    pass


class DivisionByZero(WeylError, ZeroDivisionError):
    pass


class MissingK(WeylError, ValueError):
    pass


class SingularOmega(WeylError, ValueError):
    pass


class CharPUnsupported(WeylError, ValueError):
    pass


class NotFoundWithinBound(WeylError, RuntimeError):
    """A certificate promised by a degree bound was not found.

    Reaching this means either a bug or a bound that does not hold, never bad input.
    """


class UndecidedAtCap(WeylError, RuntimeError):
    pass


class SingularInput(WeylError, ValueError):
    pass


class RankViolation(WeylError, ValueError):
    pass


class NotNormalized(WeylError, ValueError):
    pass


class RetryLimitExceeded(WeylError, RuntimeError):
    pass


class ResourceCap(WeylError, RuntimeError):
    pass


class ZeroDenominator(WeylError, ZeroDivisionError):
    pass


class NotStabilized(WeylError, RuntimeError):
    pass


class ParseError(WeylError, SyntaxError):
    """Raised on malformed operator text; ``pos`` is the 0-based offset."""

    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        self.text = text
        if pos is not None:
            message = f"{message} at position {pos}"
        super().__init__(message)


class IndexOutOfRange(WeylError, ValueError):
    pass
