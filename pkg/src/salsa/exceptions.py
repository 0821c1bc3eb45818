"""Exception hierarchy shared by the library and the CLI.

Every error the CLI can report derives from :class:`SalsaError` and carries the process exit code
the command should terminate with (1 usage/config, 2 data, 3 numeric abort).
"""


class SalsaError(Exception):
    exit_code = 1


class ConfigError(SalsaError, ValueError):
    exit_code = 1


class DataError(SalsaError, ValueError):
    exit_code = 2


class IntegrityError(DataError):
    """A checkpoint or model file failed its magic, version, length or checksum test."""


class TrainingDivergenceError(SalsaError, ArithmeticError):
    exit_code = 3

    def __init__(self, message: str, name: str | None = None):
        super().__init__(message)
        self.name = name


class DimensionError(SalsaError, ValueError):
    """Operand shapes do not agree; the message names both shapes."""


class NumericDomainError(SalsaError, ArithmeticError):
    exit_code = 3


class ContractError(SalsaError, ValueError):
    """A documented precondition of an operation was violated."""


__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "DimensionError",
    "IntegrityError",
    "NumericDomainError",
    "SalsaError",
    "TrainingDivergenceError",
]
