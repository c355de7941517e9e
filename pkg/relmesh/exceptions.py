"""Custom exceptions for the relmesh solver.

This module defines a hierarchy of exceptions that carry the numerical
context (cell index, time, iteration count) needed to diagnose a failed run.
"""

from typing import Optional, Sequence, Tuple


class RelmeshError(Exception):
    """Base exception for all relmesh errors.

    All custom exceptions in relmesh inherit from this class, allowing
    callers to catch every solver-specific error with a single handler.
    """

    pass


# ============================================================================
# Validation Errors
# ============================================================================


class ValidationError(RelmeshError):
    """Raised when input validation fails.

    This includes invalid arguments, unknown enumeration values,
    or inconsistent array shapes.
    """

    pass


class ConfigError(ValidationError):
    """Raised when a run configuration cannot be parsed or is invalid."""

    def __init__(
        self, message: str, line: Optional[int] = None, key: Optional[str] = None
    ):
        self.reason = message
        self.line = line
        self.key = key
        if line is not None:
            super().__init__(f"line {line}: {message}")
        else:
            super().__init__(message)


class CaseNotFoundError(ValidationError):
    """Raised when a case name is not in the registry."""

    def __init__(self, name: str, available: Sequence[str] = ()):
        self.name = name
        self.available = tuple(available)
        hint = f" (available: {', '.join(self.available)})" if self.available else ""
        super().__init__(f"Unknown case '{name}'{hint}")


# ============================================================================
# Physics Errors
# ============================================================================


class PhysicsError(RelmeshError):
    """Base class for thermodynamic and state-conversion errors."""

    pass


class DomainError(PhysicsError):
    """Raised when a function is evaluated outside its mathematical domain."""

    pass


class UnphysicalStateError(PhysicsError):
    """Raised when a state violates D > 0, q > 0 or |v| < 1."""

    def __init__(
        self,
        reason: str,
        cell: Optional[Tuple[int, ...]] = None,
        time: Optional[float] = None,
    ):
        self.reason = reason
        self.cell = cell
        self.time = time
        where = ""
        if cell is not None:
            where += f" at cell {cell}"
        if time is not None:
            where += f" (t={time:.6g})"
        super().__init__(f"Unphysical state{where}: {reason}")

    def at_time(self, time: float) -> "UnphysicalStateError":
        """Return a copy of this error annotated with the simulation time."""
        return UnphysicalStateError(self.reason, self.cell, time)


class NonConvergenceError(PhysicsError):
    """Raised when pressure recovery does not converge."""

    def __init__(self, iterations: int, count: int):
        self.iterations = iterations
        self.count = count
        super().__init__(
            f"Pressure recovery failed to converge in {iterations} iterations "
            f"for {count} state(s)"
        )


class DegeneracyError(PhysicsError):
    """Raised when the eigenvector scaling becomes singular."""

    def __init__(self, value: float):
        self.value = value
        super().__init__(
            f"Singular eigenvector scaling: 1 - v1^2 - v2^2 = {value:.3e}"
        )


# ============================================================================
# Mesh Errors
# ============================================================================


class MeshError(RelmeshError):
    """Base class for mesh geometry errors."""

    pass


class TangledMeshError(MeshError):
    """Raised when a cell has non-positive volume."""

    def __init__(self, cell: Optional[Tuple[int, ...]] = None, value: float = 0.0):
        self.cell = cell
        self.value = value
        where = f" at cell {cell}" if cell is not None else ""
        super().__init__(f"Tangled mesh{where}: Jacobian {value:.3e}")


# ============================================================================
# Solver Errors
# ============================================================================


class SolverError(RelmeshError):
    """Base class for time-integration errors."""

    pass


class TimeStepUnderflowError(SolverError):
    """Raised when the CFL time step collapses."""

    def __init__(self, dt: float, time: float):
        self.dt = dt
        self.time = time
        super().__init__(f"Time step underflow: dt={dt:.3e} at t={time:.6g}")


# ============================================================================
# Output Errors
# ============================================================================


class StorageError(RelmeshError):
    """Raised when a SQLite ledger operation fails."""

    def __init__(self, message: str, original_error: Optional[Exception] = None):
        self.original_error = original_error
        if original_error:
            super().__init__(f"{message}: {str(original_error)}")
        else:
            super().__init__(message)


class SnapshotError(RelmeshError):
    """Raised when a snapshot file is malformed or cannot be read."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"Snapshot {path}: {message}")


class CutlineError(RelmeshError):
    """Raised when a sampling line leaves the mesh."""

    pass
