"""Exception types shared across the package."""


class MonotoneExpanderError(Exception):
    """Base class for all package errors."""


class DeterminantError(MonotoneExpanderError, ValueError):
    """A matrix that should lie in SL2 does not have determinant 1."""


class PoleError(MonotoneExpanderError, ZeroDivisionError):
    """A Mobius map was evaluated (or differentiated) at its pole."""


class BudgetExceeded(MonotoneExpanderError):
    """An enumeration would exceed its configured node/word budget."""

    def __init__(self, message, *, needed=None, budget=None):
        super().__init__(message)
        self.needed = needed
        self.budget = budget


class NoPairFound(MonotoneExpanderError):
    """The seed search exhausted its candidates without a certified pair."""


class NoCollision(MonotoneExpanderError):
    """The densest ball of the word set holds a single word."""


class InvalidK(MonotoneExpanderError, ValueError):
    pass


class InvalidN(MonotoneExpanderError, ValueError):
    pass


class EmptyInput(MonotoneExpanderError, ValueError):
    pass


class TooLarge(MonotoneExpanderError):
    """Input is outside the supported range.

    For expansion ratios the value is still computed and attached as ``ratio``.
    """

    def __init__(self, message, *, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class NotMonotoneRelation(MonotoneExpanderError, ValueError):
    pass


class UnknownFormat(MonotoneExpanderError, ValueError):
    pass


class NoConvergence(MonotoneExpanderError):
    def __init__(self, message, *, residual=None):
        super().__init__(message)
        self.residual = residual


class BadPrime(MonotoneExpanderError, ValueError):
    pass


class BadDimension(MonotoneExpanderError, ValueError):
    pass


class DegenerateProbes(MonotoneExpanderError, ValueError):
    pass
