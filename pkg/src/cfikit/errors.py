"""Exception types shared across modules."""


class CfiError(Exception):
    """Base class for library errors."""


class GridMismatchError(CfiError):
    """Two objects live on different grids."""


class NotConvexError(CfiError):
    """A function expected to be convex fails the second-difference test."""


class InvalidCfiError(CfiError):
    """Boundary functions or slopes violate the interval invariants."""


class StructureError(CfiError):
    """A candidate does not admit a valid extreme-point structure.

    Carries the name of the violated condition and the node where it failed.
    """

    def __init__(self, condition, node, message=""):
        self.condition = condition
        self.node = node
        text = f"{condition} at node {node}"
        if message:
            text += f": {message}"
        super().__init__(text)


class SolverError(CfiError):
    """A linear program or root search did not terminate normally."""


class NotAffinelyBoundedError(CfiError):
    """Concavification was requested on an interval outside its scope."""


class PreconditionError(CfiError):
    """Inputs to an application pipeline violate its stated preconditions."""


class FalsificationError(CfiError):
    """No two-sided perturbation was found above the step floor for a non-extreme candidate."""
