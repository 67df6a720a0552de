"""Exception types raised by the library.

All of them derive from :class:`ValueError`, since every failure mode here is
an invalid or degenerate input rather than an environmental problem.
"""


class TikhonovError(ValueError):
    """Base class for all library errors."""


class DegenerateGeneratorError(TikhonovError):
    """The operator used to generate a Hilbert scale is (numerically) singular."""


class InvalidIndicesError(TikhonovError):
    """Scale indices violate a required ordering."""


class MagnitudeError(TikhonovError, OverflowError):
    """An operator evaluation would overflow."""


class InvalidParameterError(TikhonovError):
    """A noise or regularization parameter is out of range."""


class WrongModelError(TikhonovError):
    """A deterministic-only quantity was requested for stochastic data."""


class DegenerateChoiceError(TikhonovError):
    """A parameter choice rule produced a zero or non-finite value."""


class InvalidGridError(TikhonovError):
    """A candidate grid does not follow the balancing-principle construction."""
