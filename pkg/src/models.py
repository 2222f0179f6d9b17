"""
Core data models for the Symflow system.

This module defines the validated run configuration assembled by the CLI from the
config file, the environment and flags, and the diagnostics written after a run.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

BUNDLED_DIR = Path(__file__).parent / "analyses"


class AnalysisPreset(Enum):
    """Bundled analyses, or a program given with --program."""
    POINTS_TO = "points-to"
    SYMEXEC = "symexec"
    CUSTOM = "custom"


BUNDLED_PROGRAMS = {
    AnalysisPreset.POINTS_TO: BUNDLED_DIR / "pointsto.dl",
    AnalysisPreset.SYMEXEC: BUNDLED_DIR / "symexec.dl",
}


class RunConfig(BaseModel):
    """Everything one batch run needs."""
    program: Optional[Path] = None
    analysis: AnalysisPreset = AnalysisPreset.CUSTOM
    facts: Path
    out: Path
    solver_cmd: Optional[str] = None
    switch_size: int = Field(default=10, ge=0)
    bound: int = Field(default=8, ge=1)
    native_max_size: int = Field(default=10, ge=1)
    jobs: int = Field(default=1, ge=1)
    cache: Optional[Path] = None
    magic_seed: int = Field(default=0, ge=0)
    timeout: float = Field(default=60.0, gt=0)
    escalate: bool = False
    width: int = Field(default=256, ge=8)
    log_level: str = "INFO"

    @model_validator(mode="after")
    def resolve_program(self) -> "RunConfig":
        if self.analysis is AnalysisPreset.CUSTOM:
            if self.program is None:
                raise ValueError("a custom analysis needs --program")
        elif self.program is None:
            self.program = BUNDLED_PROGRAMS[self.analysis]
        return self


class RunDiagnostics(BaseModel):
    """Counters and timings of one run, flattened into diagnostics.csv."""
    analysis: str
    seconds: float = 0.0
    engine: Dict[str, Any] = Field(default_factory=dict)
    solver: Dict[str, Any] = Field(default_factory=dict)
    queries: List[Tuple[str, str, str]] = Field(default_factory=list)

    def rows(self) -> List[Tuple[str, str]]:
        """`(key, value)` pairs, sorted by key; nested stats use dotted keys."""
        flat: Dict[str, str] = {"analysis": self.analysis, "seconds": f"{self.seconds:.6f}"}

        def walk(prefix: str, value: Any):
            if isinstance(value, dict):
                for key, item in value.items():
                    walk(f"{prefix}.{key}", item)
            elif isinstance(value, list):
                for index, item in enumerate(value):
                    walk(f"{prefix}.{index}", item)
            elif isinstance(value, float):
                flat[prefix] = f"{value:.6f}"
            else:
                flat[prefix] = str(value)

        walk("engine", self.engine)
        walk("solver", self.solver)
        for index, (key, status, diagnostic) in enumerate(self.queries):
            flat[f"query.{index:04d}"] = f"{key} {status} {diagnostic}"
        return sorted(flat.items())
