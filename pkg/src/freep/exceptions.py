"""Exception hierarchy shared by all freep modules."""


class FreepError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FreepError, ValueError):
    """Malformed or out-of-contract input (bad matrix, bad subset, bad flag)."""


class ExponentError(InputError):
    """Exponent outside the admissible range (e.g. p > q, or p outside (0, 1])."""


class MetricValidationError(InputError):
    """Numbers parsed fine but do not form a valid q-metric."""


class CapacityError(FreepError, RuntimeError):
    """Instance too large for exhaustive tree enumeration."""


class PersistenceError(FreepError, RuntimeError):
    """Failed to write campaign results; partial output stays valid."""
