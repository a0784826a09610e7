"""Exception hierarchy shared across the package."""


class OptistackError(Exception):
    """Base class for all package errors."""


class ConfigurationError(OptistackError):
    """Malformed catalog, task file, or run configuration."""


class InvalidInputError(OptistackError):
    """Arguments violate a documented precondition."""


class UsageError(OptistackError):
    """API called out of sequence (e.g. stepping a finished episode)."""


class CalibrationError(OptistackError):
    """Reward calibration cannot produce a positive scale factor."""


class TrainingError(OptistackError):
    """Non-finite loss or gradient surfaced during optimization."""


class NotReadyError(OptistackError):
    """Operation requires state that is not yet available (e.g. replay under-filled)."""
