"""Exception hierarchy for the EHG pipeline.

Every error raised deliberately by the package derives from ``EhgError``. The
two branches map onto the CLI exit codes: ``EhgValidationError`` (bad input,
bad configuration, exit code 1) and ``EhgRuntimeError`` (numerical or protocol
failure while running, exit code 2). Validation errors also subclass
``ValueError`` so callers that only know the standard library still catch them.
"""

from typing import Optional


class EhgError(Exception):
    """Base class for all pipeline errors."""


class EhgValidationError(EhgError, ValueError):
    """Input, configuration or precondition violation."""


class EhgRuntimeError(EhgError, RuntimeError):
    """Failure raised while a well-formed computation was running."""


class HeaderParseError(EhgValidationError):
    """A WFDB header could not be parsed.

    Attributes:
        line_number: 1-based line of the header text that failed, if known.
    """

    def __init__(self, message: str, line_number: Optional[int] = None):
        """Initialize the error with an optional offending line number.

        Args:
            message: Human readable description of the problem.
            line_number: 1-based line number inside the header text.
        """
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class UnsupportedFormatError(EhgValidationError):
    """A WFDB storage format other than 16 was requested."""


class LengthMismatchError(EhgValidationError):
    """Binary signal size disagrees with the header."""


class AnnotationError(EhgValidationError):
    """An interval annotation is malformed, inverted, overlapping or out of bounds."""


class FilterDesignError(EhgValidationError):
    """Band-pass design parameters are invalid."""


class SegmentationError(EhgValidationError):
    """A record cannot be segmented (unlabeled group, bad window length)."""


class SignalLengthError(EhgValidationError):
    """A signal is too short for the requested operation."""


class DomainError(EhgValidationError):
    """An argument lies outside the mathematical domain of a function."""


class ShapeError(EhgValidationError):
    """Array dimensions disagree with what a trained model or dataset expects."""


class UnfittableError(EhgValidationError):
    """Training data cannot be fitted (for example a single class)."""


class ConfigError(EhgValidationError):
    """The pipeline configuration is invalid."""


class SchemaMismatchError(EhgValidationError):
    """A feature matrix file does not match the active configuration."""


class NumericalError(EhgRuntimeError):
    """A numerical routine failed to converge or produced non-finite output."""


class UndefinedFeatureError(EhgRuntimeError):
    """A feature is mathematically undefined for the given input."""


class UndefinedMetricError(EhgRuntimeError):
    """A metric is undefined for the given labels (for example single-class AUC)."""


class LeakageError(EhgRuntimeError):
    """Training rows and scored rows overlap."""


class FailureBudgetExceededError(EhgRuntimeError):
    """Too many segments failed during feature extraction."""


class ExperimentError(EhgRuntimeError):
    """A single evaluation cell failed; carries the cell coordinates."""

    def __init__(self, message: str, iteration: int, fold: int, model: str):
        """Initialize the error with the failing cell coordinates.

        Args:
            message: Description of the underlying failure.
            iteration: Iteration index of the failing cell.
            fold: Fold index of the failing cell.
            model: Model label of the failing cell.
        """
        self.detail = message
        self.iteration = iteration
        self.fold = fold
        self.model = model
        super().__init__(
            f"iteration {iteration}, fold {fold}, model {model}: {message}"
        )

    def __reduce__(self):
        """Pickle with the original constructor arguments."""
        return (type(self), (self.detail, self.iteration, self.fold, self.model))
