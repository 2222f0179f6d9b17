"""
Query Cache module for Symflow Project
This module provides the oracle cache of solver answers, keyed by query text and
optionally persisted as an append-only file.
"""

import hashlib
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional
from urllib.parse import quote, unquote

logger = logging.getLogger(__name__)


class SmtStatus(Enum):
    """Solver verdicts"""
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SmtResult:
    """
    A solver verdict with its model.

    Attributes:
        status: verdict
        model: free variable to canonical hex constant; empty unless sat
        diagnostic: why the verdict is not definite (crash, timeout, over-bound, ...)
    """
    status: SmtStatus
    model: Dict[str, str] = field(default_factory=dict)
    diagnostic: Optional[str] = None

    def __post_init__(self):
        if self.model and self.status is not SmtStatus.SAT:
            raise ValueError("only sat results carry a model")

    @property
    def is_definite(self) -> bool:
        return self.status in (SmtStatus.SAT, SmtStatus.UNSAT)


def query_key(text: str) -> str:
    """sha256 of the query text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _render_model(model: Dict[str, str]) -> str:
    if not model:
        return "-"
    return ";".join(f"{quote(var, safe='')}={model[var]}" for var in sorted(model))


def _parse_model(text: str) -> Dict[str, str]:
    if text == "-":
        return {}
    model = {}
    for item in text.split(";"):
        var, sep, value = item.partition("=")
        if not sep or not value.startswith("0x"):
            raise ValueError(f"bad model entry {item!r}")
        model[unquote(var)] = value
    return model


class QueryCache:
    """
    Query text -> SmtResult.

    With a path, existing lines `hash TAB status TAB model` are loaded at start
    and each new answer is appended. Diagnostics are not persisted.
    """

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self._entries: Dict[str, SmtResult] = {}
        self.lock = threading.RLock()
        self.stats: Dict[str, int] = {"hits": 0, "misses": 0, "stored": 0, "loaded": 0, "skipped_lines": 0}
        if self.path is not None:
            self._load()

    def _load(self):
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            return
        with open(self.path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    key, status, model = line.split("\t")
                    self._entries[key] = SmtResult(SmtStatus(status), _parse_model(model))
                except ValueError as e:
                    self.stats["skipped_lines"] += 1
                    logger.warning(f"Skipping malformed cache line {number} in {self.path}: {e}")
        self.stats["loaded"] = len(self._entries)
        logger.info(f"Loaded {len(self._entries)} cached solver answers from {self.path}")

    def get(self, text: str) -> Optional[SmtResult]:
        key = query_key(text)
        with self.lock:
            result = self._entries.get(key)
            self.stats["hits" if result is not None else "misses"] += 1
        return result

    def put(self, text: str, result: SmtResult) -> SmtResult:
        """
        Store result unless an answer is already cached; returns the cached answer.
        """
        key = query_key(text)
        stored = SmtResult(result.status, dict(result.model))
        with self.lock:
            existing = self._entries.get(key)
            if existing is not None:
                return existing
            self._entries[key] = stored
            self.stats["stored"] += 1
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(f"{key}\t{stored.status.value}\t{_render_model(stored.model)}\n")
        return result

    def clear(self):
        """Forget every entry; the persistence file is truncated."""
        with self.lock:
            self._entries.clear()
            if self.path is not None and self.path.exists():
                self.path.write_text("", encoding="utf-8")

    def __len__(self) -> int:
        return len(self._entries)

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            stats = dict(self.stats)
        stats["entries"] = len(self._entries)
        return stats
