"""Exception taxonomy.

The CLI maps these onto its exit-code contract: validation problems exit 3,
file/format problems exit 2, numeric failures exit 1.
"""


class LcError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(LcError, ValueError):
    """Array dimensions do not line up for the requested operation."""


class ArgumentError(LcError, ValueError):
    """A solver or model argument is out of its documented range."""


class NumericError(LcError, ArithmeticError):
    """A numeric precondition failed (non-finite input, etc.)."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class ValidationError(LcError, ValueError):
    """A compression plan does not satisfy the task-structure rules."""


class TaskOverlapError(ValidationError):
    """Two tasks claim the same parameter tensor."""


class ViewError(ValidationError):
    """A view cannot be applied to its parameter group."""


class SchemeParamError(ValidationError):
    """A scheme parameter is incompatible with the viewed size."""


class CStepError(LcError):
    """A compression-step solver failed; carries the task identity."""

    def __init__(self, task_index: int, message: str):
        super().__init__(f"task {task_index}: {message}")
        self.task_index = task_index


class FormatError(LcError, ValueError):
    """A file does not follow its documented binary/text layout."""


class IdxMagicError(FormatError):
    """IDX file magic number is wrong for the expected content."""


class IdxTruncatedError(FormatError):
    """IDX file ends before the declared payload."""


class IdxCountMismatchError(FormatError):
    """Image and label files declare different item counts."""


class CheckpointMagicError(FormatError):
    """Checkpoint file does not start with the LCCK magic."""


class CheckpointVersionError(FormatError):
    """Checkpoint file version is not supported by this reader."""


class CheckpointTruncatedError(FormatError):
    """Checkpoint file ends inside an entry."""


class ConfigError(LcError, ValueError):
    """Run configuration is malformed; message carries the field path."""
