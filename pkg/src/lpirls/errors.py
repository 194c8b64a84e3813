"""Exception hierarchy for the solvers."""


class LpError(Exception):
    """Base class for every error raised by :mod:`lpirls`."""


class SingularSystem(LpError):
    """The weighted normal matrix has no usable pivots."""


class InfeasibleDemand(LpError):
    """The right-hand side is not (numerically) in the column span."""


class DegenerateDirection(LpError):
    """The extra constraint row lies in the row space of the base system."""


class IterationBudgetExceeded(LpError):
    """A primal-dual loop hit its safety cap."""


class SearchCollapsed(LpError):
    """Binary search over the guess never retained a primal solution."""


class NonConvergence(LpError):
    """Iterative refinement used more residual calls than its safety bound."""


class DualDegenerate(LpError):
    """The dual iterate has (numerically) zero objective."""


class ParseError(LpError):
    """Malformed CSV input."""


class EmptyAfterCleaning(LpError):
    """Every data row of a CSV file was dropped."""


class GraphDisconnected(LpError):
    """Random kNN graph stayed disconnected after all retries."""


class EmptyInput(LpError):
    """No reports were given to aggregate."""
