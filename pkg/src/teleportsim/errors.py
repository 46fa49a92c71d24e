"""Exception types raised by the teleportsim package.

Everything derives from TeleportSimError so callers can catch the whole
family with one clause.  Validation errors double as ValueError where a
generic handler is plausible.
"""


class TeleportSimError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgument(TeleportSimError, ValueError):
    """An argument is malformed: bad shape, bad index, broken normalization."""


class InvalidUnitary(TeleportSimError, ValueError):
    """A matrix claimed to be unitary is not, beyond tolerance."""


class InvalidBasis(TeleportSimError, ValueError):
    """A measurement basis is incomplete or not orthonormal."""


class InvalidKrausSet(TeleportSimError, ValueError):
    """Measurement operators do not satisfy the completeness relation."""


class InvalidChannel(TeleportSimError, ValueError):
    """Channel amplitudes violate normalization or ordering constraints."""


class InvalidConfig(TeleportSimError, ValueError):
    """A scenario or CLI configuration is inconsistent."""


class DegenerateOutcome(TeleportSimError):
    """A post-measurement state was requested for a zero-probability outcome."""


class KnowledgeError(TeleportSimError):
    """A party would need channel parameters it does not hold."""


class InvariantViolation(TeleportSimError):
    """An internal consistency check failed while assembling results."""


class BackendError(TeleportSimError):
    """The requested trial backend is unavailable."""
