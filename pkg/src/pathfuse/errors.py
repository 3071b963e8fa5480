"""Exception taxonomy.

Every error carries an ``exit_code`` so the CLI can map failure classes to
process exit codes without string matching:

    0  success
    2  configuration error (bad flags, bad config values, out-of-range request)
    3  data error (unparseable/invalid input rows, unknown source ids)
    4  numeric error (singular systems, non-convergence, insufficient data)
    5  acceptance-gate violation (benchmark outside pinned tolerance)
"""

from __future__ import annotations


class PathfuseError(Exception):
    exit_code = 1


class ConfigError(PathfuseError):
    exit_code = 2


class DataError(PathfuseError):
    exit_code = 3


class NumericError(PathfuseError):
    exit_code = 4


class GasRangeError(ConfigError):
    """Requested frequency lies outside the attenuation table's coverage."""


class ContractError(ConfigError):
    """An operation was invoked on an object that does not support it."""


class MetricError(NumericError):
    """A metric was evaluated on degenerate input (zero baseline/weights)."""


class InsufficientDataError(NumericError):
    """Fewer samples than free coefficients (or too few survivors)."""


class SingularSystemError(NumericError):
    """Near-singular normal equations.

    ``columns`` names the design columns implicated in the deficiency.
    """

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class ConvergenceError(NumericError):
    """Iterative solver failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ConsensusFailureError(NumericError):
    """No random-sample consensus set reached the minimum viable size."""


class DegenerateDataError(NumericError):
    """Too few nonsingular elemental subsets to form a median estimate."""


class AcceptanceError(PathfuseError):
    exit_code = 5
