"""
Exception hierarchy for graspbench.

Every error carries a short machine code (same spirit as the IPC codes of the
CLI: INVALID_ARG, ...) and the process exit code the CLI maps it to:

  1: I/O problems (plain OSError, not part of this hierarchy)
  2: validation problems (bad input files, bad arguments, violated preconditions)
  3: internal/runtime problems (integration blow-up, backend failure)
"""

from __future__ import annotations

from typing import Optional


class GraspbenchError(Exception):
    code = "ERROR"
    exit_code = 3


class ValidationError(GraspbenchError):
    code = "INVALID_ARG"
    exit_code = 2


class MeshFormatError(ValidationError):
    """Mesh file could not be parsed. `line` is set for OBJ, `offset` for STL."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, offset: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif offset is not None:
            where = f" (byte offset {offset})"
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}{message}{where}")


class SchemaError(ValidationError):
    """Structured input does not match its schema. `field` is a JSON path like bodies[2].mass."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


class SceneError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class CorrelationError(ValidationError):
    pass


class IntegrationError(GraspbenchError):
    code = "INTEGRATION"

    def __init__(self, body_id: str, message: str = "non-finite state") -> None:
        self.body_id = body_id
        super().__init__(f"body '{body_id}': {message}")


class BackendError(GraspbenchError):
    code = "BACKEND"


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to a CLI exit code.
    0 is never returned; callers handle success themselves.
    """
    if isinstance(exc, GraspbenchError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return 1
    return 3
