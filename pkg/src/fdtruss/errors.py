"""Exception and warning types shared across the package."""


class FdtrussError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FdtrussError):
    """Invalid run, GA, or optimizer configuration."""


class SingularEquilibrium(FdtrussError):
    """The free-node block of the force-density matrix is singular or
    numerically indistinguishable from singular (condition estimate above
    the solver threshold). Signals a degenerate force-density vector; the
    optimizers treat the candidate as infeasible."""


class SingularStiffness(FdtrussError):
    """The reduced stiffness matrix cannot be factorized (not positive
    definite, non-finite entries, or no material at all). Signals an
    unanalyzable candidate; treated as infeasible by the optimizers."""


class ZeroVolume(FdtrussError):
    """All member areas are at the analysis floor; the design has no
    material to rescale."""


class TooFewPoints(FdtrussError):
    """A Pareto front has fewer than three usable points, so slopes and
    weight ratios cannot be estimated."""


class StartInfeasible(FdtrussError):
    """The start point handed to the weighted-sum optimizer cannot be
    analyzed (singular equilibrium or stiffness)."""


class NonConvexWarning(UserWarning):
    """Front slopes are not monotone in magnitude; ratio estimates are
    still produced but may be noisy."""


class NoProgressWarning(UserWarning):
    """The weighted-sum optimizer stalled before meeting its tolerance and
    returned the best point found so far."""
