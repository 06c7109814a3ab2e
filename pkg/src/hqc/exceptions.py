"""Exception and warning types raised across the package."""


class HQCError(Exception):
    """Base class for all errors raised by hqc."""


class ConfigError(HQCError, ValueError):
    """Invalid parameters or references to columns that do not exist."""


class DataError(HQCError, ValueError):
    """The data cannot support the requested computation."""


class LinkageParseError(DataError):
    """A linkage CSV row could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SmallSampleWarning(UserWarning):
    """A value group is small enough that the squared MMD estimate may be negative."""
