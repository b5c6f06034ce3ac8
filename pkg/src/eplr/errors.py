"""Exception types shared across the package."""


class UsageError(ValueError):
    """Arguments violate an operation's preconditions."""


class ResourceError(RuntimeError):
    """A requested enumeration or grid exceeds its size budget."""


class VerificationError(RuntimeError):
    """A self-check comparing two independent computations failed."""
