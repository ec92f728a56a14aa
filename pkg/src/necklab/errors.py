"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or input data (CLI exit code 1)."""


class SolverError(RuntimeError):
    """Linear solver failed to meet its residual contract (CLI exit code 2)."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
