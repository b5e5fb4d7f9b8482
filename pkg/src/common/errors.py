# src/common/errors.py
"""
Exception hierarchy. Every error carries the process exit code the CLI
uses when the error escapes a command.
"""


class PoiError(Exception):
    exit_code = 1


class ConfigError(PoiError, ValueError):
    exit_code = 2


class DataError(PoiError, ValueError):
    exit_code = 3


class NumericalError(PoiError, ArithmeticError):
    exit_code = 4


# Configuration / model setup problems
class UnsupportedProcessError(ConfigError):
    pass


class InadmissibleDeltaError(ConfigError):
    pass


class TauOutOfRangeError(ConfigError):
    pass


# Input data problems
class CsvParseError(DataError):
    pass


class ShapeMismatchError(DataError):
    pass


# Numerical failures
class FactorizationError(NumericalError):
    pass


class RankDeficientError(NumericalError):
    pass


class NotConvergedError(NumericalError):
    pass
