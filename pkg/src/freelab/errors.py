"""Exception types with stable command-line exit codes."""


class FreelabError(Exception):
    """Base class for toolkit errors."""

    exit_code = 3


class InvalidInputError(FreelabError):
    """Bad argument, unusable measure or potential, failed precondition."""

    exit_code = 2


class SingularEvaluationError(InvalidInputError):
    """Evaluation was requested exactly at a singular point."""


class HypothesisError(InvalidInputError):
    """An inequality hypothesis failed before any verdict was computed.

    Distinct from a failed report: the statement was never tested.  When the
    violation is a pointwise condition, `witness` holds the offending lattice
    point and the value there.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class SolverError(FreelabError):
    """An iterative solve failed to converge."""

    exit_code = 3


class MultiCutError(SolverError):
    """Equilibrium density came out negative: support is not one interval."""
