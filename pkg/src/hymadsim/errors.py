"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid scenario configuration or unknown option."""


class TraceError(ValueError):
    """Malformed or inconsistent contact trace."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
