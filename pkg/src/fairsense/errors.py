"""Exception hierarchy shared by every fairsense module."""


class FairsenseError(Exception):
    """Base class for all package-specific failures."""


class SingleClassData(FairsenseError):
    """Both group labels are required but only one is present."""


class NonFiniteInput(FairsenseError):
    """An input array contains NaN or infinity."""


class DimensionMismatch(FairsenseError):
    """Vector/matrix dimensions do not agree with the model or operation."""


class KernelMatrixTooLarge(FairsenseError):
    """Refusing to materialize an n-by-n kernel matrix above the size guard."""


class EmptySampleSet(FairsenseError):
    """A density-ratio estimator received an empty sample set."""


class SingularSystem(FairsenseError):
    """Every candidate linear system in a grid search was numerically singular."""


class NonConvergence(FairsenseError):
    """An iterative solver exhausted its iteration budget."""


class LengthMismatch(FairsenseError):
    """Paired vectors have different lengths."""


class DegenerateInput(FairsenseError):
    """A statistic is undefined for the given input (e.g. constant vector)."""


class InsufficientData(FairsenseError):
    """Too few observations for the requested statistic."""


class TooFewRows(FairsenseError):
    """A table has too few rows for the requested split."""


class ParseError(FairsenseError):
    """A delimited input file violates the expected format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
