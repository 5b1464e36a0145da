"""Exception hierarchy.

Every error raised on bad input derives from :class:`ValidationError` so the
CLI can map it to exit code 2.
"""


class ConfidynError(Exception):
    """Base class for all package errors."""


class ValidationError(ConfidynError, ValueError):
    """Input rejected before any computation was attempted."""


class InvalidParameterError(ValidationError):
    pass


class InvalidStateError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class InvalidTruthError(ValidationError):
    pass


class SingularDegreeError(ValidationError):
    """A learner has zero outdegree where an invertible degree matrix is needed."""


class UnsupportedSequenceError(ValidationError):
    pass


class UnsupportedAnalysisError(ValidationError):
    pass


class UnfittableError(ValidationError):
    pass


class MappingUndefinedError(ValidationError):
    pass


class OutOfRangeError(ConfidynError, IndexError):
    pass


class GraphParseError(ValidationError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
