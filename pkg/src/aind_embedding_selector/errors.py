"""Exception hierarchy shared by the library and the command-line front end."""

from typing import Optional


class EmbeddingSelectorError(Exception):
    """Base class for every error raised deliberately by this package."""


class DatasetError(EmbeddingSelectorError, ValueError):
    """A feature dataset could not be loaded or violates its invariants."""


class DatasetSchemaError(DatasetError):
    """The CSV header does not provide the required columns."""


class DatasetParseError(DatasetError):
    """A CSV cell could not be parsed.

    *row* is the 1-based data row number (header excluded) and *column* the
    header name of the offending cell, or None when the row arity is wrong.
    """

    def __init__(self, message: str, row: int, column: Optional[str] = None) -> None:
        location = f"row {row}" if column is None else f"row {row}, column {column!r}"
        super().__init__(f"{location}: {message}")
        self.row = row
        self.column = column


class DatasetValidationError(DatasetError):
    """Parsed values are well formed but semantically invalid (e.g. unknown split tag)."""


class GroupConsistencyError(DatasetError):
    """Rows sharing a group ID disagree on label or split."""


class EmptySplitError(DatasetError):
    """A split required for evaluation has no rows."""


class InvalidMaskError(EmbeddingSelectorError, ValueError):
    """A feature mask has the wrong length or selects no feature."""


class ConfigError(EmbeddingSelectorError, ValueError):
    """A configuration value is missing, unknown or out of range."""


class ArchiveError(EmbeddingSelectorError):
    """A front archive on disk is missing, empty or inconsistent."""


class FingerprintMismatchError(ArchiveError):
    """Persisted results were produced from a different dataset."""


class UndefinedInputError(EmbeddingSelectorError, ValueError):
    """A statistic is undefined for the given input (e.g. Jaccard of two empty sets)."""


class RunError(EmbeddingSelectorError):
    """One evolutionary run failed; carries the run ID and stage."""

    def __init__(self, run_id: int, stage: str, cause: BaseException) -> None:
        super().__init__(f"run {run_id} ({stage}) failed: {cause}")
        self.run_id = run_id
        self.stage = stage
        self.cause = cause

    def __reduce__(self):
        # Runs may fail inside joblib worker processes.
        return (type(self), (self.run_id, self.stage, self.cause))
