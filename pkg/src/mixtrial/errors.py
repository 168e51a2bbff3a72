"""Exception types shared across the package.

Plain ``ValueError`` is used for input validation everywhere; the classes
here mark conditions that callers (CLI exit codes, HTTP status mapping)
need to tell apart.
"""


class InfeasibleDesignError(RuntimeError):
    """No design satisfies the requested error-rate constraints."""


class ResourceLimitError(RuntimeError):
    """A computation exceeds a configured resource cap."""
