"""Exception hierarchy.

``ValidationError`` subclasses map to CLI exit code 1, ``IoFailure`` to 2.
"""


class ScoretrackError(Exception):
    """Base class for all package errors."""


class ValidationError(ScoretrackError, ValueError):
    pass


class NonFiniteField(ValidationError):
    pass


class NonPositiveExtent(ValidationError):
    pass


class ScoreOutOfRange(ValidationError):
    pass


class SingularCovariance(ValidationError):
    pass


class OutOfOrderFrame(ValidationError):
    pass


class FrameMismatch(ValidationError):
    pass


class ZeroGroundTruth(ValidationError):
    pass


class RecallOutOfRange(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class IoFailure(ScoretrackError, OSError):
    pass
