"""Exception hierarchy shared by all modules."""


class MvCompareError(Exception):
    """Base class for data and math errors (CLI exit code 1)."""


class ParseError(MvCompareError, ValueError):
    """Input could not be turned into an experiment table.

    ``line`` is the 1-based line number (CSV) or 1-based position in the
    ``results`` array (JSON) of the offending record, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MvCompareError, ValueError):
    pass


class UndefinedMeasure(MvCompareError, ValueError):
    """A rate measure has a zero denominator."""


class SingularCovariance(MvCompareError, ArithmeticError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class SingularScatter(MvCompareError, ArithmeticError):
    pass


class DegenerateVariance(MvCompareError, ArithmeticError):
    """Zero variance together with a nonzero effect; no test is defined."""


class SpecError(MvCompareError, ValueError):
    """Invalid simulation population spec."""
