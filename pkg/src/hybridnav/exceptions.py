"""
Custom exceptions for the hybridnav package.

This module defines every error raised by the navigation engine, grouped
by the stage that raises it (world generation, memory, policy, imagination,
evaluation, training). All errors carry a human-readable message and an
optional ``details`` dictionary so that the CLI and the episode runner can
report them without losing context.
"""

from typing import Optional, Any, Dict


class HybridNavError(Exception):
    """
    Base exception class for all hybridnav errors.

    All custom exceptions inherit from this base class, allowing callers to
    catch every engine-specific failure with a single except clause.

    Attributes:
        message: Human-readable error description
        details: Optional dictionary with additional error context

    Example:
        >>> try:
        ...     world = generate_world(WorldConfig(rooms=0))
        ... except HybridNavError as e:
        ...     print(f"hybridnav error: {e}")
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """
        Initialize hybridnav error.

        Args:
            message: Human-readable error description
            details: Optional dictionary with additional context
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        """Return error message."""
        return self.message

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to dictionary for logging and episode diagnostics."""
        return {
            'error_type': self.__class__.__name__,
            'message': self.message,
            'details': {k: _jsonable(v) for k, v in self.details.items()}
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return repr(value)


class ConfigurationError(HybridNavError):
    """
    Raised when configuration parameters are invalid.

    This includes zero vocabulary sizes, zero feature dimensions, negative
    imagination bounds or a fixed fusion factor outside [0, 1].

    Example:
        >>> raise ConfigurationError(
        ...     "object_vocab_size must be positive",
        ...     details={'object_vocab_size': 0, 'valid_range': '[1, inf)'}
        ... )
    """

    pass


class ValidationError(HybridNavError):
    """
    Raised when loaded data violates a structural invariant.

    World files that break symmetry, connectivity, unit-norm appearance or
    edge-length consistency raise this error. The ``details`` dictionary
    carries the offending ``line`` of the JSON document when known.
    """

    pass


class LookupFailure(HybridNavError):
    """Raised when a node id or room type is not known."""

    pass


class NoPathError(HybridNavError):
    """Raised when two world nodes are not connected."""

    pass


class InstructionGenerationError(HybridNavError):
    """
    Raised when an instruction category cannot be satisfied on a path.

    Example:
        >>> raise InstructionGenerationError(
        ...     "S3 needs at least two rooms along the path",
        ...     details={'category': 'S3', 'rooms_on_path': 1}
        ... )
    """

    pass


class IllegalTransitionError(HybridNavError):
    """Raised when an observation arrives from a node the agent cannot be at."""

    pass


class UndefinedCosineError(HybridNavError):
    """Raised when the pruning criterion is asked about a zero-norm feature."""

    pass


class ShapeError(HybridNavError):
    """Raised on tensor or array dimension mismatches."""

    pass


class EncodingError(HybridNavError):
    """Raised for empty instructions and out-of-vocabulary tokens."""

    pass


class FusionError(HybridNavError):
    """Raised when imagined scores have no navigable node to attach to."""

    pass


class RoutingError(HybridNavError):
    """Raised when an action target is unreachable through real memory edges."""

    pass


class SupervisionError(HybridNavError):
    """Raised when an expert label is not among the scored candidates."""

    pass


class NumericalError(HybridNavError):
    """
    Raised on non-finite gradients or losses.

    The ``details`` dictionary names the offending ``tensor``.
    """

    pass


class ExpansionExhaustedError(HybridNavError):
    """Raised when an imagination tree is expanded past its depth bound."""

    pass


class DomainError(HybridNavError):
    """Raised when a waypoint distance lies outside the heatmap range."""

    pass


class EvaluationError(HybridNavError):
    """Raised when an episode record cannot be scored."""

    pass


class AggregationError(HybridNavError):
    """Raised when metrics are aggregated over an empty record set."""

    pass


class TrainingDivergenceError(HybridNavError):
    """
    Raised when a training loss becomes non-finite.

    Attributes:
        last_good_state: parameter state dictionary from before the update
            that led to the non-finite loss
    """

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        last_good_state: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)
        self.last_good_state = last_good_state


class ExportError(HybridNavError):
    """Raised when reports, checkpoints or snapshots cannot be written."""

    pass


def format_error_context(error: Exception, include_traceback: bool = False) -> str:
    """
    Format error with context for user-friendly display.

    Args:
        error: The exception to format
        include_traceback: Whether to include stack trace

    Returns:
        Formatted error message string

    Example:
        >>> try:
        ...     raise ConfigurationError("Invalid rooms", {'rooms': 0})
        ... except HybridNavError as e:
        ...     print(format_error_context(e))
    """
    lines = [f"Error: {error}"]

    if isinstance(error, HybridNavError) and error.details:
        lines.append("\nDetails:")
        for key, value in error.details.items():
            lines.append(f"   - {key}: {value}")

    lines.append(f"\nError type: {error.__class__.__name__}")

    if include_traceback:
        import traceback
        lines.append("\nStack trace:")
        lines.extend(traceback.format_tb(error.__traceback__))

    return "\n".join(lines)


def suggest_fix(error: Exception) -> Optional[str]:
    """
    Suggest potential fixes for common errors.

    Args:
        error: The exception to analyze

    Returns:
        Suggestion string or None if no suggestion available
    """
    text = str(error).lower()

    if isinstance(error, ConfigurationError):
        if 'vocab' in text:
            return "Tip: vocabulary sizes must be positive; the defaults are 16 objects and 8 rooms."
        if 'checkpoint' in text:
            return "Tip: run `hybridnav train --out <dir>` first and pass --checkpoint <dir>/policy.ckpt."
        if 'gamma' in text:
            return "Tip: a fixed fusion factor must lie in [0, 1], e.g. 0.5."

    elif isinstance(error, ValidationError):
        return "Tip: regenerate the world with `hybridnav gen-worlds` or fix the reported line."

    elif isinstance(error, TrainingDivergenceError):
        return "Tip: lower the learning rate; the last good checkpoint was kept."

    elif isinstance(error, InstructionGenerationError):
        return "Tip: choose a longer path or a different instruction category."

    return None
