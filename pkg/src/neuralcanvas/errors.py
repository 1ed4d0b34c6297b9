"""Exception types shared across the engine."""


class ShapeError(ValueError):
    """Operand shapes are inconsistent with an operation's contract."""


class ConfigurationError(ValueError):
    """A network spec, weight set, or layer selection is invalid."""


class StateError(RuntimeError):
    """A required activation or target was not captured/retained."""


class WeightFileError(Exception):
    """Base class for weight-file problems."""


class WeightFormatError(WeightFileError):
    """Bad magic, version, or structural field in a weight file."""


class WeightChecksumError(WeightFileError):
    """Stored checksum does not match the file contents."""


class WeightTruncationError(WeightFileError):
    """File ended before a complete record could be read."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class ImageIOError(OSError):
    """An image file could not be read or decoded."""


class DivergenceError(RuntimeError):
    """The optimizer produced a non-finite loss or gradient."""

    def __init__(self, message: str, iteration: int, trace):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace
