"""
Magic constants module for Symflow Project
This module provides the pool of large constants that stand in for forall*-bound variables.
"""

import hashlib
import logging
from typing import Iterable, List, Union

from ..expr.expression import canonical_constant
from .errors import IndexOutOfRange

logger = logging.getLogger(__name__)

# Recognizable on sight and not derivable from small program constants.
ANCHOR_CONSTANT = 0x1123456789ABCDEF0123456789ABCDEF0123456789ABCDEF0123456789ABCDEF

POOL_SIZE = 16
_HEX = "0123456789abcdef"


class MagicPool:
    """
    Deterministic pool of 256-bit constants.

    Index 0 is always ANCHOR_CONSTANT. Every other index is an 8-digit ascending
    hex prefix, unique per index, followed by an irregular tail derived from the
    seed.
    """

    def __init__(self, seed: int = 0, size: int = POOL_SIZE, width: int = 256):
        if not 1 <= size <= POOL_SIZE:
            raise ValueError(f"magic pool size must be between 1 and {POOL_SIZE}")
        if width % 4 or width < 64:
            raise ValueError("magic constants need a width that is a multiple of 4 and at least 64")
        self.seed = seed
        self.width = width
        self.pool: List[int] = [self._build(index) for index in range(size)]

    def _build(self, index: int) -> int:
        if index == 0:
            return ANCHOR_CONSTANT & ((1 << self.width) - 1)
        prefix = "".join(_HEX[(index + offset) % 16] for offset in range(8))
        digits = self.width // 4 - 8
        tail = ""
        counter = 0
        while len(tail) < digits:
            tail += hashlib.sha256(f"{self.seed}:{index}:{counter}".encode()).hexdigest()
            counter += 1
        return int(prefix + tail[:digits], 16)

    def __len__(self) -> int:
        return len(self.pool)

    def magic_constant(self, index: int) -> int:
        """
        Raises:
            IndexOutOfRange: index is negative or not below the pool size
        """
        if not 0 <= index < len(self.pool):
            raise IndexOutOfRange(f"magic constant index {index} outside pool of {len(self.pool)}")
        return self.pool[index]

    def magic_hex(self, index: int) -> str:
        return canonical_constant(self.magic_constant(index), self.width)

    def check_disjoint(self, constants: Iterable[Union[int, str]]) -> List[str]:
        """Pool members that also occur among constants; empty when disjoint."""
        wanted = set(self.pool)
        clashes = set()
        for constant in constants:
            value = int(constant, 16) if isinstance(constant, str) else constant
            if value in wanted:
                clashes.add(canonical_constant(value, self.width))
        if clashes:
            logger.warning(f"{len(clashes)} program constant(s) coincide with magic constants")
        return sorted(clashes)
