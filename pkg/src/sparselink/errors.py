"""Exception types raised across the package.

Every error subclasses SparselinkError plus the closest builtin category,
so callers can catch either the package base or the usual builtin.
"""


class SparselinkError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SparselinkError, ValueError):
    """Matrix or partition dimensions are inconsistent."""


class NotHurwitz(SparselinkError, ValueError):
    """A matrix required to be Hurwitz has an eigenvalue with Re >= -tol."""


class SingularSolve(SparselinkError, RuntimeError):
    """A linear solve was numerically singular."""


class NotStabilizing(SparselinkError, ValueError):
    """A gain required to be stabilizing is not."""


class RiccatiFailure(SparselinkError, RuntimeError):
    """The Riccati iteration failed to converge or to find a starting gain."""


class LineSearchFailure(SparselinkError, RuntimeError):
    """Backtracking could not find an acceptable step."""


class LostStabilizability(SparselinkError, RuntimeError):
    """Every trial step of a line search left the stabilizing set."""


class MaxIterations(SparselinkError, RuntimeError):
    """An iteration cap was reached before the convergence test passed."""


class PatternNotStabilizable(SparselinkError, RuntimeError):
    """No stabilizing gain exists (or was found) for a sparsity pattern."""


class EmptySweep(SparselinkError, ValueError):
    """A sweep with no entries was given where at least one is required."""


class InvalidAssumption(SparselinkError, ValueError):
    """An algorithm precondition (e.g. uniform block sizes) does not hold."""


class InfeasibleOutcome(SparselinkError, ValueError):
    """A rerouting outcome marked infeasible was used where a feasible one is required."""


class IndexOutOfRange(SparselinkError, IndexError):
    """A priority or block index is outside the valid range."""


class UnknownFormat(SparselinkError, ValueError):
    """An unsupported output or input format name was requested."""
