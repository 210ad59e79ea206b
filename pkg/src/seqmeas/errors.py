"""Error types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can map
failures to diagnostics and exit statuses without string matching.
"""

from __future__ import annotations


class SeqMeasError(Exception):
    """Base class for all package errors."""

    code = "ERROR"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


class GameSpecError(SeqMeasError):
    """A game description violates a structural invariant."""

    code = "INVALID_SPEC"


class NormalizationError(GameSpecError):
    """A density row does not integrate to one against the base measure."""

    code = "NORMALIZATION"


class EmptyActionSetError(GameSpecError):
    code = "EMPTY_ACTION_SET"


class NegativeDensityError(GameSpecError):
    code = "NEGATIVE_DENSITY"


class NotProbabilityError(GameSpecError):
    """A vector meant to be a probability distribution is not one."""

    code = "NOT_PROBABILITY"


class NoTailBoundError(SeqMeasError):
    code = "NO_TAIL_BOUND"


class NoTailBoundSumError(SeqMeasError):
    """The declared payoff tail bounds do not have a finite sum."""

    code = "NO_TAIL_BOUND_SUM"


class InvalidInformationSetError(SeqMeasError):
    code = "INVALID_INFORMATION_SET"


class PlayerNotActiveError(SeqMeasError):
    code = "PLAYER_NOT_ACTIVE"


class MeasureInvariantError(SeqMeasError):
    """A supplied strategic measure fails the factorization check."""

    code = "MEASURE_INVARIANT"


class ZeroReachError(SeqMeasError):
    code = "ZERO_REACH"


class NonConvergenceError(SeqMeasError):
    code = "NON_CONVERGENCE"


class GridTooCoarseError(SeqMeasError):
    code = "GRID_TOO_COARSE"


class SizeCapExceededError(SeqMeasError):
    code = "SIZE_CAP_EXCEEDED"


class ParseError(SeqMeasError):
    """Spec-file syntax or schema error, with position information."""

    code = "PARSE"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        pos = ""
        if line is not None:
            pos = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + pos)
        self.line = line
        self.column = column
