"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class UsageError(ValueError):
    """An operation was called outside its supported regime."""


class BudgetExceeded(RuntimeError):
    """A measurement was requested beyond the pilot-symbol budget cap."""


class SingularPilot(ValueError):
    """Pilot matrix is rank deficient, least-squares estimate undefined."""


class DegenerateChannel(ValueError):
    """Channel vector is identically zero, combiner undefined."""


class GridEmpty(RuntimeError):
    """Spacing grid contains no points inside the movable region."""


class AvailableGridExhausted(RuntimeError):
    """No free grid point left while relocating a spacing violator."""
