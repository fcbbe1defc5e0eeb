"""
Exception types for pflat.

Validation failures that callers may want to act on carry the offending
simplex or file line as an attribute.
"""


class PflatError(Exception):
    """Base class for all pflat errors."""


class ComplexError(PflatError, ValueError):
    """Raised when a list of simplices does not form a valid closed manifold."""

    def __init__(self, message: str, simplex: tuple | None = None):
        super().__init__(message)
        self.simplex = simplex


class NonManifold(ComplexError):
    """A codimension-one face is not shared by exactly two top simplices,
    a vertex link is not a sphere, or the complex is disconnected."""


class DuplicateSimplex(ComplexError):
    """The same vertex set was listed twice."""


class UnknownSimplex(ComplexError):
    """A lookup named a simplex that is not in the complex."""


class Degenerate(PflatError, ValueError):
    """A simplex has no positive volume for the given lengths."""

    def __init__(self, message: str, simplex: tuple | None = None):
        super().__init__(message)
        self.simplex = simplex


class OutOfDomain(Degenerate):
    """A vertex function lies outside the domain of a conformal chart."""


class ParseError(PflatError, ValueError):
    """A mesh file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InfeasibleTarget(PflatError, ValueError):
    """A prescribed curvature target violates a conservation law."""


class NotCritical(PflatError, ValueError):
    """Rigidity was requested at a point that does not solve the target."""


class SolverError(PflatError, RuntimeError):
    """Base class for solver failures; carries the trace accumulated so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class MaxIterations(SolverError):
    """The iteration budget ran out before the residual met the tolerance."""


class LeftDomain(SolverError):
    """No step along the search direction stays inside the chart domain."""


class SingularHessian(SolverError):
    """The gauge-reduced linear system could not be solved."""


class AbortNonMonotone(SolverError):
    """The flow residual failed to decrease across a full monitoring window."""
