"""Exception hierarchy. CLI exit codes hang off these classes."""


class NovaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(NovaError):
    """Bad configuration: unknown key, malformed or out-of-range value."""

    exit_code = 2


class DataError(NovaError):
    """Bad input data: unreadable files, shape mismatches, invariant violations."""

    exit_code = 3


class NumericError(NovaError):
    """Numeric failure such as a non-finite training loss."""

    exit_code = 4


class DegenerateShapeError(DataError):
    """A mask rasterized to zero area after clipping; caller should re-draw the pose."""


class KeyframeEditError(DataError):
    """A keyframe editor failed; carries the offending frame index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"keyframe {index}: {message}")
        self.index = index
