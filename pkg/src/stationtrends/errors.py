"""Exception hierarchy shared by the library and the batch CLI.

Each class carries the process exit code the CLI maps it to.
"""


class StationTrendsError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(StationTrendsError):
    """Invalid configuration file, flag value, or option combination."""

    exit_code = 2


class DataError(StationTrendsError):
    """Input data violates a contract (bad file, gap structure, degenerate values)."""

    exit_code = 3


class ConvergenceError(StationTrendsError):
    """An iterative numerical procedure failed to converge within its cap."""

    exit_code = 4
