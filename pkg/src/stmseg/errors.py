class StmsegError(Exception):
    """Base class for errors raised by stmseg."""


class InvalidInputError(StmsegError, ValueError):
    """An input grid, list or file does not meet an operation's preconditions."""


class InvalidParameterError(StmsegError, ValueError):
    """A numeric parameter is outside its admissible range."""


class StageError(StmsegError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class ImageIOError(StmsegError, OSError):
    """An image or label file could not be read or written."""
