"""Exception types raised across the package.

The CLI maps every :class:`UlcnetError` to exit code 1; argument problems
and missing input files exit with 2.
"""


class UlcnetError(Exception):
    """Base class for all typed errors."""


class ConfigError(UlcnetError, ValueError):
    pass


class DimensionError(UlcnetError, ValueError):
    pass


class UnsupportedFormatError(UlcnetError, ValueError):
    pass


class WavFormatError(UnsupportedFormatError):
    pass


class WeightFileError(UlcnetError, ValueError):
    pass


class ContractError(UlcnetError, ValueError):
    """A caller broke a runtime contract (e.g. wrong chunk size)."""
