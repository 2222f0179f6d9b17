"""
Expression errors for Symflow Project
"""


class ExprError(Exception):
    """Base class for expression-domain errors."""


class UnknownOperator(ExprError):
    """Operator name missing from the operator table."""


class UnboundVariable(ExprError):
    """Concrete evaluation met a variable without a value."""


class EmptyList(ExprError):
    """flatten was given no expressions."""


class MalformedExpr(ExprError):
    """A value is not a well-formed 3-field expression record."""
