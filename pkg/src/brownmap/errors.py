"""Exception types shared across the package."""


class BrownmapError(Exception):
    pass


class DomainError(BrownmapError, ValueError):
    """An argument lies outside the region where the quantity is defined."""


class LawError(DomainError):
    """A measure description violates the Law invariants."""


class BlowupError(BrownmapError, ArithmeticError):
    """The characteristic flow diverged before the requested end time."""

    def __init__(self, message, t_blowup=None):
        super().__init__(message)
        self.t_blowup = t_blowup


class ConsistencyError(BrownmapError, RuntimeError):
    """Two results that must coincide (by injectivity) do not."""


class ConvergenceError(BrownmapError, RuntimeError):
    """An iterative numerical routine failed to converge."""
