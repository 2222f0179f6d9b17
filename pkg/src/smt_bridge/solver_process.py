"""
Solver Process module for Symflow Project
This module drives SMT-LIB2 solver subprocesses over stdin/stdout, one query at a time,
with timeouts, crash recovery and a small process pool.
"""

import logging
import queue
import shlex
import subprocess
import threading
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

from ..expr.expression import canonical_constant
from .errors import SolverCrash, SolverNotConfigured
from .printer import smt_symbol
from .query_cache import SmtResult, SmtStatus

logger = logging.getLogger(__name__)

_STATUSES = {"sat": SmtStatus.SAT, "unsat": SmtStatus.UNSAT, "unknown": SmtStatus.UNKNOWN,
             "timeout": SmtStatus.TIMEOUT}


class _ReadTimeout(Exception):
    pass


def parse_sexpr(text: str):
    """Nested lists of atoms; |quoted| symbols keep their bars."""
    def worker(cursor: int):
        while text[cursor] in " \t\r\n":
            cursor += 1
        if text[cursor] == "(":
            items = []
            cursor += 1
            while True:
                while text[cursor] in " \t\r\n":
                    cursor += 1
                if text[cursor] == ")":
                    return items, cursor + 1
                item, cursor = worker(cursor)
                items.append(item)
        if text[cursor] == "|":
            end = text.index("|", cursor + 1)
            return text[cursor:end + 1], end + 1
        start = cursor
        while cursor < len(text) and text[cursor] not in "() \t\r\n|":
            cursor += 1
        return text[start:cursor], cursor

    try:
        return worker(0)[0]
    except (IndexError, ValueError) as e:
        raise SolverCrash(f"unparseable solver output {text!r}") from e


def bitvector_value(term) -> int:
    """#x.., #b.. or (_ bvN w) as an int."""
    if isinstance(term, list) and len(term) == 3 and term[0] == "_" and term[1].startswith("bv"):
        return int(term[1][2:])
    if isinstance(term, str) and term.startswith("#x"):
        return int(term[2:], 16)
    if isinstance(term, str) and term.startswith("#b"):
        return int(term[2:], 2)
    raise SolverCrash(f"not a bit-vector value: {term!r}")


class SolverProcess:
    """
    One SMT-LIB2 solver in incremental mode.

    A reader thread moves stdout lines onto a queue so reads can time out; a
    timed-out or crashed process is killed and restarted on the next query.
    """

    def __init__(self, command: Union[str, Sequence[str]], timeout: float = 60.0,
                 logic: str = "QF_BV", width: int = 256):
        self.command: List[str] = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise SolverNotConfigured("no solver command configured")
        self.timeout = timeout
        self.logic = logic
        self.width = width
        self.process: Optional[subprocess.Popen] = None
        self._lines: Optional[queue.Queue] = None
        self._reader: Optional[threading.Thread] = None
        self.stats: Dict[str, int] = {"starts": 0, "queries": 0, "timeouts": 0, "crashes": 0}

    # process lifecycle

    def start(self):
        try:
            self.process = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1,
            )
        except OSError as e:
            raise SolverNotConfigured(f"cannot start solver {self.command[0]!r}: {e}") from e
        self._lines = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, args=(self.process, self._lines), daemon=True)
        self._reader.start()
        self.stats["starts"] += 1
        logger.debug(f"Started solver {' '.join(self.command)} (pid {self.process.pid})")

    @staticmethod
    def _read_loop(process: subprocess.Popen, lines: queue.Queue):
        for line in process.stdout:
            lines.put(line)
        lines.put("")

    @property
    def running(self) -> bool:
        return self.process is not None and self.process.poll() is None

    def kill(self):
        if self.process is None:
            return
        try:
            self.process.kill()
            self.process.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            logger.warning(f"Solver process {self.process.pid} did not exit after kill")
        self.process = None
        self._lines = None
        self._reader = None

    def close(self):
        if self.process is None:
            return
        try:
            self.process.stdin.write("(exit)\n")
            self.process.stdin.flush()
            self.process.wait(timeout=2)
        except (OSError, ValueError, subprocess.TimeoutExpired):
            pass
        self.kill()

    # protocol

    def _write(self, text: str):
        try:
            self.process.stdin.write(text)
            self.process.stdin.flush()
        except (OSError, ValueError) as e:
            raise SolverCrash(f"cannot write to solver: {e}") from e

    def _read_statement(self, deadline: float) -> str:
        parts: List[str] = []
        depth = 0
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise _ReadTimeout()
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                raise _ReadTimeout() from None
            if line == "":
                raise SolverCrash("solver exited: " + " ".join(parts) if parts else "solver exited")
            line = line.strip()
            if not line and not parts:
                continue
            depth += line.count("(") - line.count(")")
            parts.append(line)
            if depth <= 0:
                return " ".join(parts)

    def check(self, text: str, free_vars: Sequence[str]) -> SmtResult:
        """
        Solve one query: reset, declare the logic, send the text, check-sat and,
        when sat, read the values of the free variables.

        Crashes and timeouts come back as results with a diagnostic; the
        process is killed and restarted on the next call.
        """
        if not self.running:
            self.start()
        self.stats["queries"] += 1
        deadline = time.monotonic() + self.timeout
        try:
            self._write(f"(reset)\n(set-option :produce-models true)\n(set-logic {self.logic})\n"
                        f"{text}\n(check-sat)\n")
            errors: List[str] = []
            while True:
                answer = self._read_statement(deadline)
                if answer.startswith("(error"):
                    errors.append(answer)
                    continue
                break
            status = _STATUSES.get(answer)
            if status is None:
                raise SolverCrash(f"unexpected solver answer {answer!r}")
            if errors:
                return SmtResult(SmtStatus.UNKNOWN, diagnostic="solver error: " + " ".join(errors))
            if status is not SmtStatus.SAT or not free_vars:
                return SmtResult(status)
            return SmtResult(status, self._get_values(free_vars, deadline))
        except _ReadTimeout:
            self.stats["timeouts"] += 1
            logger.warning(f"Solver timed out after {self.timeout}s; restarting it")
            self.kill()
            return SmtResult(SmtStatus.TIMEOUT, diagnostic=f"timeout after {self.timeout}s")
        except SolverCrash as e:
            self.stats["crashes"] += 1
            logger.warning(f"Solver crashed: {e}")
            self.kill()
            return SmtResult(SmtStatus.UNKNOWN, diagnostic=f"crash: {e}")

    def _get_values(self, free_vars: Sequence[str], deadline: float) -> Dict[str, str]:
        symbols = [smt_symbol(var) for var in free_vars]
        self._write(f"(get-value ({' '.join(symbols)}))\n")
        answer = self._read_statement(deadline)
        if answer.startswith("(error"):
            raise SolverCrash(f"get-value failed: {answer}")
        by_name = {}
        for pair in parse_sexpr(answer):
            if not isinstance(pair, list) or len(pair) != 2 or not isinstance(pair[0], str):
                raise SolverCrash(f"unexpected get-value entry {pair!r}")
            by_name[pair[0].strip("|")] = canonical_constant(bitvector_value(pair[1]), self.width)
        return {var: by_name[var] for var in free_vars if var in by_name}


class SolverPool:
    """Up to `size` solver processes; each serves one query at a time."""

    def __init__(self, command: Union[str, Sequence[str]], size: int = 1, timeout: float = 60.0,
                 logic: str = "QF_BV", width: int = 256):
        if size < 1:
            raise ValueError("solver pool size must be at least 1")
        self.command = command
        self.size = size
        self.timeout = timeout
        self.logic = logic
        self.width = width
        self._idle: "queue.LifoQueue[SolverProcess]" = queue.LifoQueue()
        self._all: List[SolverProcess] = []
        self.lock = threading.RLock()

    @contextmanager
    def acquire(self) -> Iterator[SolverProcess]:
        process = self._take()
        try:
            yield process
        finally:
            self._idle.put(process)

    def _take(self) -> SolverProcess:
        try:
            return self._idle.get_nowait()
        except queue.Empty:
            pass
        with self.lock:
            if len(self._all) < self.size:
                process = SolverProcess(self.command, self.timeout, self.logic, self.width)
                self._all.append(process)
                return process
        return self._idle.get()

    def check(self, text: str, free_vars: Sequence[str]) -> SmtResult:
        with self.acquire() as process:
            return process.check(text, free_vars)

    def close(self):
        with self.lock:
            for process in self._all:
                process.close()

    def get_stats(self) -> Dict[str, Any]:
        totals = {"processes": len(self._all), "starts": 0, "queries": 0, "timeouts": 0, "crashes": 0}
        for process in self._all:
            for key, value in process.stats.items():
                totals[key] += value
        return totals
