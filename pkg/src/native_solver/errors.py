"""
Native solver errors for Symflow Project
"""


class NativeSolverError(Exception):
    """Base class for native solver errors."""


class SeedTooLarge(NativeSolverError):
    """A seed or constraint has more nodes than the universe size bound."""


class NotInUniverse(NativeSolverError):
    """An expression asked about is not a member of the universe of evaluation."""


class NoStrategy(NativeSolverError):
    """No linear solution pair covers the operator of an equation."""
