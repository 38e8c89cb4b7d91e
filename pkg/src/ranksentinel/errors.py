"""Exception hierarchy shared by all ranksentinel modules.

Each class maps to one CLI exit code so shell pipelines can distinguish
bad input from degenerate data from a failed optimization.
"""


class RankSentinelError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(RankSentinelError):
    """Malformed or inconsistent input (files, labels, parameters)."""

    exit_code = 2


class DegenerateStatisticsError(RankSentinelError):
    """Statistic undefined on this data: zero variance, empty change set."""

    exit_code = 3


class OptimizationError(RankSentinelError):
    """The weight-steepness fit could not be carried out."""

    exit_code = 4
