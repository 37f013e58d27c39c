"""Exception types shared across the package."""


class MfsepError(Exception):
    """Base class for all package errors."""


class DimensionError(MfsepError, ValueError):
    """Operands have incompatible lengths or indices are out of range."""


class CapacityError(MfsepError, ValueError):
    """A request exceeds a configured size cap (qubits, truth-table length)."""


class DegenerateMatchingError(MfsepError, ValueError):
    """x = 0 was used where a perfect matching is required."""


class CorruptDataError(MfsepError, ValueError):
    """Training labels contradict each other."""


class InsufficientDataError(MfsepError, ValueError):
    """Training labels do not determine the hidden string uniquely."""


class StrategyMismatchError(MfsepError, ValueError):
    """A classical representation was produced by a different strategy."""


class BudgetError(MfsepError, ValueError):
    """A measurement strategy would exceed its bit budget."""


class NoExactModeError(MfsepError):
    """The generator has no exact output distribution; use sampling instead."""


class ConfigError(MfsepError, ValueError):
    """Invalid experiment configuration."""
