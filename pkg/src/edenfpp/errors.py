"""Exception hierarchy shared by every module."""


class EdenError(Exception):
    """Base class for all package errors."""


class InvalidElementError(EdenError, ValueError):
    pass


class BudgetExceededError(EdenError):
    """An enumeration (ball, oracle paths, word length) outgrew its budget."""


class OracleBudgetError(BudgetExceededError):
    pass


class OutOfWindowError(EdenError, KeyError):
    pass


class VariantMismatchError(EdenError, ValueError):
    pass


class DomainError(EdenError, ValueError):
    pass


class ConfigError(EdenError, ValueError):
    """Bad user configuration (maps to CLI exit code 2)."""


class UnreachableError(EdenError):
    pass


class SaturatedError(EdenError):
    """The Eden chain has no boundary edge left inside the window."""


class CouplingInvalidError(EdenError, ValueError):
    pass


class CapViolationError(EdenError):
    """A computation needed more room than the window provides (exit code 3)."""


class ModelBugError(EdenError, AssertionError):
    """A deterministic invariant that must hold exactly was violated."""


class UnsupportedLayoutError(EdenError, ValueError):
    pass


class ConeViolationError(CapViolationError):
    """The window is too narrow for the dependence cone of the statistic."""
