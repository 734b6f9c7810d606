"""Exception types shared across the package."""


class QklError(Exception):
    """Base class for all library-specific failures."""


class NotHurwitzError(QklError, ValueError):
    """A drift matrix has an eigenvalue with non-negative real part.

    The offending eigenvalue is stored in ``eigenvalue``.
    """

    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(
            f"matrix is not Hurwitz: eigenvalue {eigenvalue} has real part "
            f"{eigenvalue.real:.3e} >= 0"
        )


class NotPositiveDefiniteError(QklError, ValueError):
    """A matrix required to be symmetric positive definite is not."""


class InfeasibleError(QklError, RuntimeError):
    """The quadratic-exponential functional diverges for the given weight.

    ``radius`` holds the spectral radius whose exceeding 1 signals divergence.
    """

    def __init__(self, radius):
        self.radius = radius
        super().__init__(
            f"quadratic-exponential cost is infinite: feasibility radius "
            f"{radius:.6g} >= 1"
        )


class ToleranceError(QklError, RuntimeError):
    """Two routes to the same quantity disagree beyond the allowed tolerance.

    Signals an internal numerical inconsistency (bad truncation, broken
    symmetry of an assembled matrix, non-real determinant, ...), not a user
    input error.
    """


class ConfigError(QklError, ValueError):
    """A run configuration failed to parse or validate."""
