"""Exception types shared across the package."""


class OptbasisError(Exception):
    """Base class for all errors raised by this package."""


class SingularOperator(OptbasisError):
    """Factorization found an exactly or numerically singular operator."""


class DimensionMismatch(OptbasisError):
    """Operand shapes are incompatible."""


class SvdFailure(OptbasisError):
    """Dense SVD did not converge."""


class OrderTooHigh(OptbasisError):
    """Requested difference order does not fit on the grid."""


class ProblemTooLarge(OptbasisError):
    """Dense verification path refused: problem exceeds its size guard."""


class SingularTheta(OptbasisError):
    """Observation Gram matrix is singular at zero observation noise."""


class RankDeficient(OptbasisError):
    """A matrix that must have full column rank does not."""


class RankExhausted(OptbasisError):
    """Requested truncation level exceeds the available basis rank."""


class Diverged(OptbasisError):
    """Fixed-point iteration left the trust region."""


class BoundViolation(OptbasisError):
    """A theoretical inequality failed beyond its roundoff allowance."""


class ConfigInvalid(OptbasisError):
    """Experiment configuration failed validation; message names the key."""


class RankDeficientWarning(UserWarning):
    """Non-fatal notice that an orthonormalization dropped dependent columns."""
