"""Exception hierarchy shared by the library and the command line.

Each class carries the process exit code the CLI maps it to.
"""


class ToeplitzQrngError(Exception):
    exit_code = 1


class UsageError(ToeplitzQrngError, ValueError):
    """Bad arguments to a function: wrong lengths, indices out of range."""

    exit_code = 1


class DegenerateInputError(UsageError):
    """Input has no variance (or similar) so the statistic is undefined."""


class ConfigurationError(ToeplitzQrngError, ValueError):
    """Inconsistent extractor, channel or run configuration."""

    exit_code = 2


class DataFormatError(ToeplitzQrngError, ValueError):
    """A file on disk does not follow the expected layout."""

    exit_code = 3

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class InfeasibleError(ToeplitzQrngError, ValueError):
    """Not enough min-entropy to extract anything at the requested security."""

    exit_code = 4
