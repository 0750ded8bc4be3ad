"""Exception hierarchy shared by all modules."""


class NVError(Exception):
    """Base class for simulator errors."""

    reason = "runtime"


class ConfigError(NVError):
    reason = "config"


class DomainError(NVError, ValueError):
    """Argument outside the admissible domain of a formula (e.g. |xi| > 1)."""

    reason = "domain"


class NumericError(NVError, FloatingPointError):
    """Non-finite value produced or sampled."""

    reason = "numeric"


class OutOfDomainError(NVError):
    """A trajectory left the region covered by a field sampler."""

    reason = "out-of-domain"

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class SupportOverflowError(NVError):
    """Momentum support reached the guard region of the momentum grid."""

    reason = "support-overflow"


class InsufficientHistoryError(NVError):
    """Cone history does not cover the requested backward light cone."""

    reason = "insufficient-history"
