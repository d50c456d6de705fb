"""Exception hierarchy shared across the package."""


class MavikError(Exception):
    """Base class for all mavik-specific errors."""


class ContractViolation(MavikError):
    """A caller broke a documented precondition (bad shapes, bad config)."""


class InternalInvariantViolation(MavikError):
    """A computation produced something that should be impossible.

    Raised by runtime guards (orthogonality, normalization norms, size
    bounds).  Seeing this means a kernel is numerically broken, not that the
    input was merely unusual.
    """


class ResourceLimitError(MavikError):
    """A configurable resource cap (e.g. expansion term count) was exceeded."""


class DegenerateInputError(MavikError):
    """Input data carries no usable information (e.g. all points identical)."""
