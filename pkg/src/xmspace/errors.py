"""Exception types shared across the engine."""


class XMError(Exception):
    """Base class for engine errors."""


class Indeterminate(XMError):
    """An exact comparison could not be settled within the precision cap."""


class NoUpperEstimateWitness(XMError):
    """No k <= k_max certifies phi(k) < k."""


class DivergenceGuard(XMError):
    """A geometric ratio that must be < 1 could not be certified."""


class OverflowBudget(XMError):
    """Block construction ran past the coordinate cap."""


class BudgetExceeded(XMError):
    """A combinatorial search exceeded its configured cap."""


class IterationCap(XMError):
    """The cutting-plane loop hit its iteration cap.

    The best enclosure found so far is attached as ``bound``.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class HypothesisFailed(XMError):
    """The hypotheses of a lemma verifier do not hold for the given instance."""


class DecompositionFailure(XMError):
    """An M-decomposition could not be reindexed into a Schreier decomposition."""


class ParseError(XMError, ValueError):
    """Malformed text serialization."""
