"""Two-dimensional Nordstrom-Vlasov simulator with a retarded-integral oracle.

Modules: ``geometry`` (cone kernels), ``characteristics`` (ODE curves),
``field`` (leapfrog wave solver), ``retarded`` (light-cone evaluation),
``vlasov`` (semi-Lagrangian transport) and ``harness`` (configuration,
coupled loop, verification, probes).
"""
from .errors import (ConfigError, DomainError, InsufficientHistoryError, NumericError,
                     NVError, OutOfDomainError, SupportOverflowError)

__version__ = "0.1.0"

__all__ = [
    "NVError", "ConfigError", "DomainError", "NumericError", "OutOfDomainError",
    "SupportOverflowError", "InsufficientHistoryError", "__version__",
]
