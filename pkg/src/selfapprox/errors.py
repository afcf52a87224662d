"""Exception hierarchy shared by all modules."""


class SelfApproxError(ValueError):
    """Base class for every error raised by the package."""


class InvalidPeriodError(SelfApproxError):
    pass


class InvalidRangeError(SelfApproxError):
    pass


class InsufficientDataError(SelfApproxError):
    pass


class AlignmentError(SelfApproxError):
    pass


class InvalidInputError(SelfApproxError):
    pass


class SingularFitError(SelfApproxError):
    """The least-squares system for a polynomial trend is rank deficient."""


class SignDomainError(SelfApproxError):
    """A fractional-degree blend was evaluated where its two fits disagree in sign."""


class IterationFailed(SelfApproxError):
    """No candidate configuration was feasible for an iteration."""


class GuaranteeUnreachableError(SelfApproxError):
    """Guaranteed mode could not halve the residual even at the highest usable degree.

    The model fitted up to the failing iteration is attached as ``partial_model``.
    """

    def __init__(self, message, partial_model=None):
        super().__init__(message)
        self.partial_model = partial_model


class CsvParseError(SelfApproxError):
    def __init__(self, message, row=None, cell=None):
        super().__init__(message)
        self.row = row
        self.cell = cell
