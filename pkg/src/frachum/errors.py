"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`FracHUMError`
so callers (the CLI in particular) can map failures to exit codes.
"""

from __future__ import annotations


class FracHUMError(Exception):
    """Base class for all package errors."""

    exit_code = 5


class DomainError(FracHUMError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConvergenceError(FracHUMError, ArithmeticError):
    """A series or iteration failed to meet its truncation criterion."""


class GridMismatchError(DomainError):
    """Two signals or trajectories live on incompatible time grids."""


class DegenerateActuatorError(DomainError):
    """The actuator does not excite any resolved mode."""


class RankDeficiencyError(FracHUMError, ArithmeticError):
    """Gram-Schmidt met a (numerically) dependent seed vector."""


class IllPosedError(FracHUMError, ArithmeticError):
    """The HUM Gramian (or a normal-equation matrix) is numerically singular."""

    exit_code = 3

    def __init__(self, message: str, condition_estimate: float = float("inf")):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class InfeasibleError(FracHUMError, ArithmeticError):
    """The affine terminal constraint has no solution."""

    exit_code = 4


class ScenarioError(FracHUMError, ValueError):
    """A scenario file is malformed; ``key`` carries the offending key path.

    The message reads ``"<section>.<key> <reason>"``.
    """

    exit_code = 2

    def __init__(self, key: str, reason: str):
        super().__init__(f"{key} {reason}")
        self.key = key
        self.reason = reason
