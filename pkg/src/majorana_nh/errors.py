"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model or run configuration (bad variant/field combination, bad config file)."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract.

    The best-effort result (if any) is attached as ``.result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
