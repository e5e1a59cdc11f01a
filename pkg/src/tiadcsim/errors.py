"""Exception hierarchy shared across the simulator."""


class TiAdcError(Exception):
    """Base class for all simulator errors."""


class InputError(TiAdcError, ValueError):
    """Malformed operation input (length mismatch, bad parameter value)."""


class SizeError(InputError):
    """Array length does not meet a structural requirement (e.g. power of two)."""


class DomainError(InputError):
    """Numeric argument outside its valid domain (e.g. tone beyond Nyquist)."""


class ConfigurationError(TiAdcError):
    """Inconsistent converter or experiment configuration."""


class DegenerateSignalError(TiAdcError):
    """Signal carries no usable information (all-zero, constant, zero power)."""


class DivergenceError(TiAdcError):
    """A timing estimate or correction exceeds half a sample period."""
