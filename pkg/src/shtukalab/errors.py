"""Exception hierarchy shared by all modules.

Errors that mean "the computation needs more precision or a larger
extension" derive from :class:`PrecisionError`; the CLI maps them to exit
code 3.  Everything else is a plain value error about the input.
"""


class ShtukaLabError(Exception):
    """Base class of all library errors."""


class PrecisionError(ShtukaLabError):
    """A result is not determined by the stored precision or budget."""


class InsufficientPrecision(PrecisionError):
    pass


class PrecisionLoss(PrecisionError):
    pass


class JetOrderTooSmall(PrecisionError):
    pass


class RamificationBudgetExceeded(PrecisionError):
    pass


class ExtensionBudgetExceeded(PrecisionError):
    pass


class NoConvergence(PrecisionError):
    pass


class EndpointMismatch(ShtukaLabError):
    pass


class NotFStable(ShtukaLabError):
    pass


class HypothesisFailed(ShtukaLabError):
    pass


class ShapeViolation(ShtukaLabError):
    pass


class WeightMismatch(ShtukaLabError):
    pass


class NotInJ(ShtukaLabError):
    pass


class NotEtale(ShtukaLabError):
    """The semilinear equation is outside the supported (etale / rank one) shapes."""
