"""Exception types raised across the package."""


class AnalysisLpError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(AnalysisLpError, ValueError):
    pass


class RankDeficient(AnalysisLpError, ValueError):
    """The vectors do not span the ambient space."""


class IllConditioned(AnalysisLpError, ArithmeticError):
    pass


class InvalidP(AnalysisLpError, ValueError):
    pass


class InvalidSize(AnalysisLpError, ValueError):
    pass


class InvalidShape(AnalysisLpError, ValueError):
    pass


class InvalidRange(AnalysisLpError, ValueError):
    pass


class InvalidBlockSize(AnalysisLpError, ValueError):
    pass


class MeasureInvalid(AnalysisLpError, ValueError):
    pass


class OrthogonalityViolated(AnalysisLpError, ValueError):
    pass


class EmptyMask(AnalysisLpError, ValueError):
    pass


class DegenerateFrame(AnalysisLpError, RuntimeError):
    """Too many random trials produced a vanishing synthesis vector."""


class NonPositiveConstant(AnalysisLpError, ArithmeticError):
    """A stability constant evaluated to a non-positive (or undefined) value.

    Attributes
    ----------
    which : str
        ``"Gamma1"`` or ``"Gamma2"``.
    terms : dict
        The intermediate quantities that produced the failure.
    """

    def __init__(self, which, terms):
        self.which = which
        self.terms = dict(terms)
        detail = ", ".join(f"{k}={v:.6g}" for k, v in self.terms.items())
        super().__init__(f"{which} is not positive ({detail})")


class Infeasible(AnalysisLpError, ValueError):
    pass


class NotConverged(AnalysisLpError, RuntimeError):
    pass


class IterationNotConverged(AnalysisLpError, RuntimeError):
    pass
