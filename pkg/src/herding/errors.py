"""Exception types shared across the package."""


class HerdingError(Exception):
    """Base class for every error raised by this package."""


class DegenerateGeometryError(HerdingError):
    """Two agents are numerically coincident, so the interaction terms of
    the velocity field (and their derivatives) are undefined."""


class InitialBreachError(HerdingError):
    """A sheep starts inside an inflated protected zone; the herding
    problem requires every sheep to start outside."""


class AllocationError(HerdingError):
    """One-to-one sheep/dog allocation requested with unequal team sizes."""


class InfeasibleConstraintError(HerdingError):
    """A per-dog herding QP reported an infeasible constraint set."""


class ScenarioFormatError(HerdingError):
    """A scenario document failed validation.

    ``code`` is a short machine-readable tag: ``"schema"`` for malformed
    or ill-typed documents, ``"initial-breach"`` for a sheep starting
    inside a zone, ``"bad-dt"`` for a non-positive time step.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
