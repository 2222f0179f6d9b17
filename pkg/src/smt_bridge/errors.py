"""
SMT bridge errors for Symflow Project
"""


class SmtError(Exception):
    """Base class for SMT bridge errors."""


class CyclicLets(SmtError):
    """Let bindings that depend on each other in a cycle."""


class NoTemplate(SmtError):
    """The operator renders through a direct SMT-LIB function, not a template."""


class IndexOutOfRange(SmtError):
    """Magic constant index beyond the pool size."""


class SolverCrash(SmtError):
    """The solver process died or answered with garbage."""


class SolverNotConfigured(SmtError):
    """No solver command, or the command cannot be started."""
