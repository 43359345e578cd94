class ResourceError(RuntimeError):
    """A requested computation exceeds a configured size cap."""


class NonConvergenceError(RuntimeError):
    """An infinite series did not meet its stopping rule within the term cap."""
