"""
Forall-star module for Symflow Project
This module checks, by exhaustive enumeration at a small width, that pinning a bound
variable to a magic constant never turns a satisfiable universal formula unsat.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

from ..expr.concrete import eval_concrete
from ..expr.expression import Expr, variables
from ..expr.operators import OperatorTable
from .magic import MagicPool

logger = logging.getLogger(__name__)

MAX_FREE_VARS = 2


@dataclass
class ForAllStarReport:
    """
    Outcome of one soundness check.

    Attributes:
        star_sat: some free assignment satisfies the formula with the bound variable pinned
        forall_sat: some free assignment satisfies it for every value of the bound variable
        witness: the first assignment found for star_sat
    """
    constraint: Expr
    bound_var: str
    width: int
    star_sat: bool
    forall_sat: bool
    witness: Dict[str, int] = field(default_factory=dict)

    @property
    def violation(self) -> bool:
        return not self.star_sat and self.forall_sat


def _assignments(names: List[str], width: int) -> Iterator[Dict[str, int]]:
    for values in itertools.product(range(1 << width), repeat=len(names)):
        yield dict(zip(names, values))


def check_forall_star_soundness(constraint: Expr, bound_var: str, width: int = 8,
                                pool: Optional[MagicPool] = None, magic_index: int = 0,
                                table: Optional[OperatorTable] = None) -> ForAllStarReport:
    """
    Decide both the pinned and the truly universal reading of `constraint = 1`.

    Args:
        constraint: formula over bound_var and at most two free variables
        bound_var: the forall*-quantified variable
        width: enumeration width
        pool: magic pool; the pinned value is the magic constant reduced modulo 2**width
        magic_index: which magic constant to pin
        table: operator table

    Returns:
        ForAllStarReport; report.violation is True only if pinning was unsound
    """
    free = sorted(variables(constraint) - {bound_var})
    if len(free) > MAX_FREE_VARS:
        raise ValueError(f"exhaustive check supports at most {MAX_FREE_VARS} free variables, got {len(free)}")
    pool = pool or MagicPool()
    pinned = pool.magic_constant(magic_index) & ((1 << width) - 1)

    star_sat, witness = False, {}
    for env in _assignments(free, width):
        env[bound_var] = pinned
        if eval_concrete(constraint, env, width, table) == 1:
            star_sat, witness = True, env
            break

    forall_sat = False
    for env in _assignments(free, width):
        if all(eval_concrete(constraint, {**env, bound_var: b}, width, table) == 1
               for b in range(1 << width)):
            forall_sat = True
            break

    report = ForAllStarReport(constraint, bound_var, width, star_sat, forall_sat, witness)
    if report.violation:
        logger.error(f"forall* unsound for {constraint}: pinned unsat, universal sat")
    return report
