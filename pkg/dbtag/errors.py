"""Exception hierarchy shared by every dbtag module, plus CLI exit codes."""

from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class DbtagError(Exception):
    """Base class for all dbtag errors."""


class SpanBoundsError(DbtagError, IndexError):
    """A span does not fit inside the document it is applied to."""


class ConsistencyError(DbtagError):
    """An internal invariant (non-overlap, label/link agreement, ...) was violated."""


class SqlParseError(DbtagError):
    def __init__(self, message: str, offset: Optional[int] = None, hint: Optional[str] = None,
                 record_id: Optional[str] = None):
        self.message = message
        self.offset = offset
        self.hint = hint
        self.record_id = record_id
        super().__init__(str(self))

    def with_record(self, record_id: str) -> "SqlParseError":
        return SqlParseError(self.message, self.offset, self.hint, record_id)

    def __str__(self):
        parts = []
        if self.record_id is not None:
            parts.append(f"record {self.record_id}")
        if self.offset is not None:
            parts.append(f"byte {self.offset}")
        where = f" ({', '.join(parts)})" if parts else ""
        hint = f"; {self.hint}" if self.hint else ""
        return f"SQL parse error{where}: {self.message}{hint}"


class LabelAlignmentError(DbtagError):
    """Gold and predicted label sequences (or tokens and labels) differ in length."""

    def __init__(self, message: str, record_id: Optional[str] = None):
        self.record_id = record_id
        prefix = f"record {record_id}: " if record_id is not None else ""
        super().__init__(f"{prefix}{message}")


class DatasetFormatError(DbtagError):
    """An input file is malformed or a record lacks a required field."""

    def __init__(self, message: str, path=None, position: Optional[str] = None):
        self.path = path
        self.position = position
        where = f"{path}" if path is not None else "<input>"
        if position:
            where = f"{where} ({position})"
        super().__init__(f"{where}: {message}")


class CalibrationError(DbtagError):
    """Calibration cannot run, e.g. no usable gold examples."""


class ConfigError(DbtagError):
    """A DBTAG_* environment setting has an unusable value."""
