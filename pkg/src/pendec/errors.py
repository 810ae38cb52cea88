"""Exception types shared across the solver stack."""


class DimensionMismatch(ValueError):
    """An input vector does not have the dimension the operation expects."""


class EvaluationError(RuntimeError):
    """An oracle produced a non-finite value; the problem is malformed and the run aborts."""


class NumericalFailure(RuntimeError):
    """A numerical kernel or a line search failed; the run stops with partial results."""


class LineSearchFailure(NumericalFailure):
    """Backtracking exhausted its budget; usually a gradient/oracle inconsistency."""


class InfeasiblePolyhedron(ValueError):
    """The polyhedron {z : Az <= b} is empty (detected through the dual)."""
