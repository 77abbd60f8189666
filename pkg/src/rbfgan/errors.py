"""Exception hierarchy shared by every module."""


class RbfGanError(Exception):
    """Base class for all package errors."""


class DimensionError(RbfGanError, ValueError):
    pass


class ParameterError(RbfGanError, ValueError):
    pass


class NonFiniteError(RbfGanError, ValueError):
    pass


class ResourceError(ParameterError):
    pass


class ResolutionError(ParameterError):
    """Solver resolution too coarse or the nonlinear iteration did not converge."""


class SchemaError(RbfGanError, ValueError):
    pass


class CsvParseError(SchemaError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.row = row
        self.column = column


class ColumnError(ParameterError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class UndefinedMetricError(RbfGanError, ArithmeticError):
    pass


class ContractError(RbfGanError, ValueError):
    pass


class DivergenceError(RbfGanError, FloatingPointError):
    pass


class ArchitectureParseError(RbfGanError, ValueError):
    def __init__(self, message, text="", position=0):
        super().__init__(f"{message} at position {position} in {text!r}")
        self.position = position


class ConfigError(RbfGanError, ValueError):
    pass


class CheckpointError(RbfGanError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointFormatError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass
