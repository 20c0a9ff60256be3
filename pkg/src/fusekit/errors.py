"""Exception hierarchy shared by all fusekit modules.

Every error raised by the library derives from FusekitError so the CLI can
catch one type and turn it into a single machine-parsable stderr line.
"""


class FusekitError(Exception):
    """Base class for all errors raised by fusekit."""


class ValidationError(FusekitError):
    """A value violates a documented invariant (bad probability row,
    all-zero weight table, malformed image buffer, ...)."""


class UsageError(FusekitError):
    """An operation was called with structurally wrong inputs
    (empty vote list, mismatched lengths, misaligned rows)."""


class AlignmentError(UsageError):
    """Image-id sets of two inputs do not join cleanly; the message lists
    the discrepancies."""


class UndefinedMetricError(FusekitError):
    """A metric has an empty denominator (no positives / no negatives).
    Never silently reported as 0 or 1."""


class FileFormatError(FusekitError):
    """A file failed to parse; carries path and 1-based line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class PlanError(FusekitError):
    """Augmentation plan construction is impossible as requested
    (target below count without the subsample flag, empty class with a
    nonzero target, ...)."""
