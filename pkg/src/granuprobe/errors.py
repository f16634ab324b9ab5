"""Exception hierarchy shared by all granuprobe modules."""


class DomainError(ValueError):
    """An input falls outside the valid domain of an operation."""


class SpillError(DomainError):
    """Content would reach the container rim at the requested tilt."""


class NegativeMassError(DomainError):
    """Force readings imply a negative content mass."""


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
