"""Exception hierarchy shared by every module.

Input problems derive from :class:`ValidationError` (also a ``ValueError``),
numerical failures from :class:`NumericalError`. The CLI maps the two
families to distinct exit codes.
"""


class CoinductError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CoinductError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(CoinductError, ArithmeticError):
    """A numerical procedure failed to deliver its guarantee."""


class InvalidContraction(ValidationError):
    pass


class EmptySampleSet(ValidationError):
    pass


class PredicateViolated(ValidationError):
    """A sample handed to the coinduction checker fails the predicate itself."""


class NotSquare(ValidationError):
    pass


class NotStochastic(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotErgodic(ValidationError):
    pass


class UnknownAction(ValidationError):
    pass


class InvalidPolicy(ValidationError):
    pass


class InvalidDistribution(ValidationError):
    pass


class InvalidMdp(ValidationError):
    pass


class UnreachableNode(ValidationError):
    pass


class DanglingChild(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class NonConvergence(NumericalError):
    pass


class NoWitness(NumericalError):
    """No action dominates the strategy value; the supplied value is inconsistent."""
