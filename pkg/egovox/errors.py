"""Exception types raised across egovox.

Value-type failures subclass ``ValueError`` as well, so callers that only
catch ``ValueError`` keep working."""

from typing import Optional


class EgovoxError(Exception):
    """Base class for every error raised by egovox."""


class StructuralError(EgovoxError, ValueError):
    """Shape or dimension mismatch, bad index, malformed mesh."""


class InvalidRangeError(EgovoxError, ValueError):
    """A range whose lower end exceeds its upper end."""


class OutOfWindowError(EgovoxError, ValueError):
    """Events outside the accumulation window they were handed with."""


class ValidationError(EgovoxError, ValueError):
    """A value outside its domain (non-orthonormal rotation, duplicate id, ...)."""


class InsufficientFramesError(EgovoxError, ValueError):
    """Too few frames for a temporal difference."""


class ConfigError(EgovoxError, ValueError):
    """Bad configuration file, flag value or input listing."""


class FormatError(EgovoxError, ValueError):
    """A reader rejected its input; ``offset`` is the byte offset of the fault."""

    def __init__(self, offset: int, message: str, path: Optional[str] = None):
        self.offset = int(offset)
        self.message = message
        self.path = path
        super().__init__(str(self))

    def with_path(self, path) -> "FormatError":
        self.path = str(path)
        self.args = (str(self),)
        return self

    def __str__(self):
        prefix = f'{self.path}: ' if self.path else ''
        return f'{prefix}offset {self.offset}: {self.message}'


class SchemaError(FormatError):
    """A structured (JSON) file is well-formed but misses or mistypes a field."""


class FaceIndexError(FormatError, StructuralError):
    """A mesh face refers to a vertex that does not exist."""
