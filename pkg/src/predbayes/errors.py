"""Exception hierarchy shared across the package."""


class PredbayesError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(PredbayesError, ValueError):
    """A distribution or prior parameter lies outside its domain."""


class InvalidCovarianceError(PredbayesError, ValueError):
    """A covariance matrix is not positive definite."""


class NonstationaryParametersError(PredbayesError, ValueError):
    """The autoregressive coefficient does not define a stable process."""


class SingularDesignError(PredbayesError, ValueError):
    """A regression design matrix is rank deficient."""


class NumericalFailureError(PredbayesError, ArithmeticError):
    """A numerical operation failed; the current chain iteration is unusable."""


class DegenerateSampleError(PredbayesError, ValueError):
    """A sample has no spread where spread is required."""


class ZeroVarianceError(DegenerateSampleError):
    """A series is (numerically) constant."""


class InsufficientDrawsError(PredbayesError, ValueError):
    """Too few draws to carry out the requested computation."""


class DegeneratePriorError(PredbayesError, ValueError):
    """The prior ordinate is zero; the Bayes factor is undefined."""


class DataValidationError(PredbayesError, ValueError):
    """Input data violates a documented contract."""


class CsvParseError(DataValidationError):
    """A CSV row could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LogDomainError(DataValidationError):
    """A constructed series entry has no logarithm."""


class ConfigError(PredbayesError, ValueError):
    """A configuration file or object is invalid."""


class InsufficientDataError(PredbayesError, ValueError):
    """Not enough data to aggregate or emit results."""


class StudyError(PredbayesError, RuntimeError):
    """Too many replications of a simulation study failed."""
