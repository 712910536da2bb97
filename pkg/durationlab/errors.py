"""Exception types raised across the package."""

from typing import Any


class DurationLabError(Exception):
    """Base class for every error raised by durationlab."""


class InvalidArgumentError(DurationLabError, ValueError):
    """An argument violates a documented precondition."""


class RecordParseError(InvalidArgumentError):
    """A single input record could not be parsed.

    Attributes:
        line: 1-based line number in the source file (header is line 1).
        field: Name of the offending field.
    """

    def __init__(self, line: int, field: str, message: str) -> None:
        super().__init__(f"line {line}: {field}: {message}")
        self.line = line
        self.field = field


class EmptySeriesError(InvalidArgumentError):
    """A stream or series has nothing to work on."""


class DegenerateSeriesError(InvalidArgumentError):
    """A series is non-empty but carries no spread (e.g. sigma == 0)."""


class ParameterError(InvalidArgumentError):
    """Distribution or generator parameters outside their valid domain."""


class EmptyConditionError(InvalidArgumentError):
    """An octile group has no successor values."""


class MissingProfileError(InvalidArgumentError):
    """A duration falls in a minute where the intraday profile is undefined."""

    def __init__(self, minute: int) -> None:
        super().__init__(f"Intraday profile undefined at minute {minute}")
        self.minute = minute


class IncompleteInputError(InvalidArgumentError):
    """A required duration class is missing from a summary set."""


class ConfigValidationError(InvalidArgumentError):
    """A pipeline configuration failed validation before any computation."""


class ConvergenceError(DurationLabError, RuntimeError):
    """An iterative estimator failed to converge.

    Attributes:
        diagnostics: Iteration counts, gradient norms and per-start outcomes.
    """

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InfiniteResidualError(DurationLabError, RuntimeError):
    """A model density vanishes where the empirical density does not."""

    def __init__(self, center: float) -> None:
        super().__init__(f"Model density is zero at non-empty bin centered at {center:.6g}")
        self.center = center


class SingularWindowError(DurationLabError, RuntimeError):
    """A detrended window has zero residual while q <= 0."""

    def __init__(self, window: int, scale: int | None = None) -> None:
        where = f" at scale {scale}" if scale is not None else ""
        super().__init__(f"Zero residual in window {window}{where}; F_q undefined for q <= 0")
        self.window = window
        self.scale = scale


class DegeneratePartitionWarning(UserWarning):
    """Octile boundaries collapse onto a single value."""


class SpectrumWarning(UserWarning):
    """alpha(q) is not monotone beyond tolerance (estimation noise)."""
