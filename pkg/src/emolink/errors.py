"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
DegenerateStatisticsError -> 4.
"""


class EmolinkError(Exception):
    """Base class for package errors."""


class ConfigError(EmolinkError):
    """Invalid configuration: bad fields, missing paths, out-of-range values."""


class DataError(EmolinkError):
    """Invalid or inconsistent input data or artifacts."""


class DegenerateStatisticsError(EmolinkError):
    """A statistic is undefined on the given input (constant vectors,
    all-zero snapshots, too few observations)."""


class SamplerError(DataError):
    """The constrained shuffle could not produce a valid assignment."""
