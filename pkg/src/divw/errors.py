"""Exception hierarchy shared by every module in the package."""


class DivwError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DivwError, ValueError):
    """Inputs are well-formed but inconsistent with the requested analysis."""


class DataParseError(DivwError, ValueError):
    """A summary-statistics or parameter file could not be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    row : int, optional
        1-based data row number (header excluded) where parsing failed.
    column : str, optional
        Column name involved in the failure.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EstimatorError(DivwError, ArithmeticError):
    """An estimator is undefined for the given data."""


class NoUsableInstrumentsError(EstimatorError):
    """The selection set is empty or the IVW denominator vanishes."""


class DegenerateDenominatorError(EstimatorError):
    """The debiased denominator sum over the selected SNPs is not positive.

    The offending value is kept on ``denominator`` so callers can report it.
    """

    def __init__(self, denominator, message=None):
        if message is None:
            message = (
                "weak-instrument degenerate denominator: "
                f"sum(w_hat - v_hat) = {denominator!r} <= 0"
            )
        super().__init__(message)
        self.denominator = denominator
