"""Exception types shared across the package."""


class SoftcorefError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SoftcorefError):
    """Invalid configuration: bad ranges, dimensions, or flag values."""


class InputError(SoftcorefError):
    """Structurally invalid runtime input, e.g. mismatched mention sets,
    a non-stochastic link distribution, or inconsistent dimensions."""


class FormatError(SoftcorefError):
    """Malformed corpus, key, or model file."""

    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        prefix = str(path) if path is not None else ""
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class TrainingError(SoftcorefError):
    """Training aborted, e.g. a non-finite loss or gradient."""
