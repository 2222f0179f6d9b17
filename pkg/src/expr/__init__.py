"""
Expression module for Symflow Project
This module provides the symbolic expression domain shared by both solvers and both analyses.
"""

from .codec import ExprCodec, register_expr_functors
from .concrete import DEFAULT_WIDTH, apply_operator, eval_concrete, fold
from .errors import EmptyList, ExprError, MalformedExpr, UnboundVariable, UnknownOperator
from .expression import (
    FRESH_PREFIX,
    Expr,
    VarClass,
    canonical_constant,
    flatten,
    fresh,
    is_constant_name,
    iter_subexpressions,
    order_key,
    parse_expr,
    serialize,
    split_conjuncts,
    subexpressions,
    substitute,
    tree_size,
    variables,
)
from .operators import LinearSolution, OperatorSpec, OperatorTable, SolutionSide, const_value

free_variables = variables

__all__ = [
    'ExprCodec',
    'register_expr_functors',
    'DEFAULT_WIDTH',
    'apply_operator',
    'eval_concrete',
    'fold',
    'EmptyList',
    'ExprError',
    'MalformedExpr',
    'UnboundVariable',
    'UnknownOperator',
    'FRESH_PREFIX',
    'Expr',
    'VarClass',
    'canonical_constant',
    'flatten',
    'free_variables',
    'fresh',
    'is_constant_name',
    'iter_subexpressions',
    'order_key',
    'parse_expr',
    'serialize',
    'split_conjuncts',
    'subexpressions',
    'substitute',
    'tree_size',
    'variables',
    'LinearSolution',
    'OperatorSpec',
    'OperatorTable',
    'SolutionSide',
    'const_value',
]
