"""Exception types shared across the package."""


class GroupRiskError(Exception):
    """Base class for all domain errors raised by this package."""


class DimensionMismatch(GroupRiskError):
    """Input arrays do not have mutually consistent shapes."""


class NotPSD(GroupRiskError):
    """Covariance matrix has an eigenvalue below the negative tolerance."""


class NonPositiveAlpha(GroupRiskError):
    """A risk aversion is zero or negative."""


class NonNegativeBudget(GroupRiskError):
    """The expected-utility budget must be strictly negative."""


class NonPositiveBeta(GroupRiskError):
    """A tilt scale (risk tolerance) must be strictly positive."""


class InvalidWeights(GroupRiskError):
    """A weight matrix row is out of range or does not sum to one."""


class NotMember(GroupRiskError):
    """Bank has zero weight in the requested group."""


class ZeroWeight(NotMember):
    """Weight derivative requested at a zero weight."""


class EmptyCounterparty(GroupRiskError):
    """A group contains no bank other than the one being optimized."""


class SingleBlock(GroupRiskError):
    """Operation needs at least two groups."""


class InvalidSplit(GroupRiskError):
    """Sub-group weights are not within (0, w] of the parent group."""


class TooLarge(GroupRiskError):
    """Exhaustive enumeration refused for this problem size."""


class NotConverged(GroupRiskError):
    """Dynamics exhausted the iteration budget.

    Carries the partial result (with ``converged=False``) in ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DegenerateWeights(GroupRiskError):
    """Importance weights collapsed (effective sample size too small)."""


class NotIID(GroupRiskError):
    """Operation requires independent banks with a common variance."""


class ParseError(GroupRiskError):
    """Malformed configuration, strategy string, or input file."""


class NonPositivePrice(ParseError):
    """Price series contains a zero or negative value."""


class TooFewRows(ParseError):
    """Price series too short to estimate moments."""


class DegenerateSeries(ParseError):
    """A constant price series has no defined correlation."""


class UnknownExample(GroupRiskError):
    """No embedded fixture with the requested name."""
