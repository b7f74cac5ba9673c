"""Exception and warning types raised by beliefvar."""


class BeliefVarError(Exception):
    """Base class for all beliefvar errors."""


class NetworkError(BeliefVarError, ValueError):
    pass


class CycleDetected(NetworkError):
    pass


class MissingRow(NetworkError):
    pass


class NonPositiveAlpha(NetworkError):
    pass


class IndexMismatch(NetworkError):
    pass


class NonPositiveM(NetworkError):
    pass


class NotNormalized(NetworkError):
    pass


class ZeroProbabilityConfig(NetworkError):
    pass


class ScopeMismatch(BeliefVarError, ValueError):
    pass


class ZeroEvidenceProbability(BeliefVarError, ArithmeticError):
    pass


class NumericalInstability(BeliefVarError, ArithmeticError):
    pass


class DegenerateQuery(BeliefVarError, ArithmeticError):
    pass


class SingularPsi(BeliefVarError, ArithmeticError):
    pass


class UnknownBenchmark(BeliefVarError, KeyError):
    pass


class InsufficientData(BeliefVarError, ValueError):
    pass


class DegenerateDenominator(RuntimeWarning):
    """Covariance denominator vanished; the simplified covariance was used."""


class NonConvergence(RuntimeWarning):
    """A fixed-point iteration hit its cap; the last iterate is reported."""
