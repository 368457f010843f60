"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation problems exit with 1,
capacity problems with 2.
"""
from __future__ import annotations


class PathLearnError(Exception):
    """Base class for all library errors."""


class ValidationError(PathLearnError, ValueError):
    """Invalid argument, malformed model, or broken invariant."""


class CycleError(ValidationError):
    pass


class FaithfulnessError(ValidationError):
    """A network constant (gamma or w_min) is zero, so no finite sample size works."""


class DegenerateSampleError(ValidationError):
    """An imperfect intervention never hit its target value in the drawn samples."""


class SchemaVersionError(ValidationError):
    pass


class BifSyntaxError(ValidationError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnsupportedFeatureError(ValidationError):
    pass


class CapacityError(PathLearnError):
    """A brute-force routine would exceed its configured state-space cap."""


class GenerationError(PathLearnError):
    """Rejection sampling of a random network hit its retry cap."""


class CyclicAnswerError(ValidationError):
    """Noisy query answers formed a directed cycle, so no reduction exists.

    ``edges`` holds the raw positive answers; ``report`` the query accounting.
    """

    def __init__(self, message: str, edges=(), report=None):
        super().__init__(message)
        self.edges = list(edges)
        self.report = report
