"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: config problems exit 2,
numerical problems exit 3, I/O problems exit 4.
"""


class UqbenchError(Exception):
    """Base class for all package errors."""


class ConfigError(UqbenchError):
    """Invalid configuration, option combination, or input contract."""


class ShapeError(ConfigError):
    """Array dimensions do not chain or do not match a declared contract."""


class CsvFormatError(ConfigError):
    """A CSV artifact could not be parsed; message carries the line number."""


class DomainError(UqbenchError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalDivergenceError(UqbenchError):
    """Training produced a non-finite loss or gradient; names the layer."""


class MetricError(UqbenchError):
    """A metric is undefined for the given inputs (e.g. zero variance)."""


class ClampSaturationWarning(UserWarning):
    """More than 1% of a batch hit the concentration clamp bounds."""
