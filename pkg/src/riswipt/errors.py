"""Exception types shared across the package."""


class RiswiptError(Exception):
    """Base class for all package-specific errors."""


class DomainError(RiswiptError, ValueError):
    """A scalar argument is outside its mathematical domain."""


class DimensionError(RiswiptError, ValueError):
    """Array arguments have inconsistent shapes."""


class FormatError(RiswiptError):
    """A file or text blob does not follow the documented format."""


class InfeasibleBudget(RiswiptError):
    """Fixed hardware overhead meets or exceeds the total power budget."""


class InfeasibleStart(RiswiptError):
    """Feasibility repair could not produce a design meeting the harvest thresholds."""


class SolverFailure(RiswiptError):
    """The conic solver returned a non-optimal status."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class InfeasibleSubproblem(SolverFailure):
    """A convex subproblem was reported infeasible."""
