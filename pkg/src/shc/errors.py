"""Exception hierarchy shared by every shc module."""


class ShcError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidData(ShcError):
    pass


class TooFewObservations(ShcError):
    pass


class InvalidK(ShcError):
    pass


class NotInternal(ShcError):
    pass


class DegenerateData(ShcError):
    pass


class DegenerateSample(DegenerateData):
    pass


class KindMismatch(ShcError):
    pass


class NodeTooSmall(ShcError):
    pass


class InvalidDesign(ShcError):
    pass


class InvalidConfig(ShcError):
    pass


class ParseError(ShcError):
    """Malformed matrix file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IoError(ShcError, OSError):
    pass
