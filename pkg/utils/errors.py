from __future__ import annotations


class InhomError(Exception):
    """Base class for every error raised by the analysis pipeline."""

    exit_code = 1


class DataError(InhomError, ValueError):
    """Input data is malformed, out of window or selects nothing usable."""

    exit_code = 3


class NumericError(InhomError, ValueError):
    """A numerical quantity is undefined for the given inputs."""

    exit_code = 4


class WindowError(NumericError):
    pass


class InsufficientPointsError(NumericError):
    def __init__(self, message: str = "insufficient points"):
        super().__init__(message)
