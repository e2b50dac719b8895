"""Exception hierarchy shared by all modules."""


class ConsensusError(Exception):
    """Base class for every error raised by this package."""


class InfeasibleBase(ConsensusError):
    pass


class RecursionBudgetExceeded(ConsensusError):
    """The primitive-call budget of a solver run was exhausted.

    Almost always means the supplied problem violates the LP-type axioms.
    """


class TooLarge(ConsensusError):
    pass


class DimensionMismatch(ConsensusError):
    pass


class Infeasible(ConsensusError):
    pass


class NotStripeGeneric(ConsensusError):
    pass


class DuplicatePoints(ConsensusError):
    pass


class NegativeRadicand(ConsensusError):
    pass


class ConnectivityRetryExhausted(ConsensusError):
    pass


class UnsupportedSchedule(ConsensusError):
    pass


class NotJointlyConnected(ConsensusError):
    pass


class NotBijective(ConsensusError):
    pass


class TimeVaryingNotSupported(ConsensusError):
    pass


class InsufficientSamples(ConsensusError):
    pass


class OutOfRange(ConsensusError):
    pass


class EmptySample(ConsensusError):
    pass


class BudgetExceeded(ConsensusError):
    pass


class PNotInQ(ConsensusError):
    pass


class InitialGraphDisconnected(ConsensusError):
    pass


class InvariantViolation(ConsensusError):
    """A runtime-checked algorithm invariant failed."""


class DegenerateCircumcircle(ConsensusError):
    """Three collinear points have no circumcircle."""


class CombinatorialDimensionExceeded(ConsensusError):
    """A minimal subset with the required value has more than delta elements."""
