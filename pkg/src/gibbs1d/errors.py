"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`GibbsError`.
The CLI maps the subclasses onto exit codes through ``exit_code``.
"""


class GibbsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ModelError(GibbsError, ValueError):
    """A model document or a constructor argument is malformed."""

    exit_code = 2


class DomainError(GibbsError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 2


class UncoveredSiteError(DomainError):
    """A site needed for an evaluation is covered by no configuration."""


class BoundaryWindowError(DomainError):
    """A boundary configuration does not reach far enough for the truncation radius."""


class ConfigurationError(GibbsError):
    """An operation was asked for something the chosen configuration cannot provide."""

    exit_code = 2


class PreconditionError(GibbsError):
    """A documented precondition of an operation does not hold."""

    exit_code = 3


class DivergenceError(GibbsError):
    """The summability condition sum_n f(n) < inf fails for the potential."""

    exit_code = 3


class UnsupportedConstraintError(GibbsError):
    """A conditioning event has zero probability (or empty support)."""

    exit_code = 3


class FitDegenerateError(GibbsError):
    """Too few usable points for a decay fit."""

    exit_code = 3


class EnumerationTooLargeError(GibbsError):
    """A complete enumeration would exceed the configured cap."""

    exit_code = 4

    def __init__(self, required, cap):
        self.required = required
        self.cap = cap
        super().__init__(
            f"enumeration too large: {required} configurations required, cap is {cap}"
        )
