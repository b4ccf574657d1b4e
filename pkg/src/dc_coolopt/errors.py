"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all dc-coolopt errors."""


class DimensionMismatch(ToolkitError):
    """Array shapes are inconsistent with the instance dimensions."""


class NonPositiveCoefficient(ToolkitError):
    """A cost coefficient is <= 0 where strict positivity is required."""


class ZeroRow(ToolkitError):
    """A server's cooling-matrix row is all zeros (server cannot be cooled)."""


class PreconditionViolated(ToolkitError):
    """Generator or solver parameters violate a documented precondition."""


class TooLarge(ToolkitError):
    """Enumeration guard tripped: the search space exceeds the allowed size."""


class Infeasible(ToolkitError):
    """No feasible point exists for the requested problem."""


class NumericalFailure(ToolkitError):
    """The LP pivoting degenerated beyond recovery; result would be untrustworthy."""


class MassLoss(ToolkitError):
    """Internal assertion: gradual rounding failed to conserve total load."""


class BudgetExceeded(ToolkitError):
    """Branch-and-bound exhausted its node budget before proving optimality."""

    def __init__(self, message, best=None, nodes=0):
        super().__init__(message)
        self.best = best
        self.nodes = nodes


class RankDeficient(ToolkitError):
    """The least-squares system has no unique solution."""


class RegressionFailed(ToolkitError):
    """Data-center model construction failed because a regression was rank-deficient."""
