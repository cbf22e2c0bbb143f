"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
InsufficientDataError -> 4.
"""


class HerdsimError(Exception):
    pass


class ConfigError(HerdsimError, ValueError):
    """Invalid parameter, unknown config key or constraint violation."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class DomainError(HerdsimError, ValueError):
    """Argument outside the domain of a model function."""


class DataError(HerdsimError, ValueError):
    """Malformed or unusable input data (including zero variance)."""


class InsufficientDataError(HerdsimError, ValueError):
    """Not enough samples or bins for an estimator."""


class StepCollapseError(HerdsimError, RuntimeError):
    """Integrator needed more internal steps than allowed."""


class AbsorbingStateError(HerdsimError, RuntimeError):
    """Master-equation state with zero total rate."""
