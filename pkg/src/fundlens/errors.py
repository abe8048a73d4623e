"""Exception hierarchy shared across the package."""


class FundlensError(Exception):
    """Base class for all package errors."""


class ConfigError(FundlensError):
    """Bad run configuration or missing referenced path (exit code 2)."""


class DataError(FundlensError):
    """Bad data or shape mismatch at runtime (exit code 3)."""


class InvalidGoal(DataError):
    pass


class InvalidAmount(DataError):
    pass


class InvalidRatio(DataError):
    pass


class SchemaError(DataError):
    pass


class ParseError(DataError):
    pass


class ShapeError(DataError):
    pass


class LabelError(DataError):
    pass


class RangeError(DataError):
    pass


class DegenerateInput(DataError):
    pass


class InsufficientData(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptySetting(DataError):
    pass


class InvalidMatrix(DataError):
    pass


class InvalidImage(DataError):
    pass


class SpecError(DataError):
    pass


class InvalidDf(FundlensError):
    pass


class DomainError(FundlensError):
    pass


class NonConvergence(FundlensError):
    """Iterative numeric routine failed to converge; never a silent wrong value."""


class DegenerateNode(FundlensError):
    pass


class SurrogateUnavailable(FundlensError):
    """Lexicon lacks the categories the surrogate summary variable needs."""


class ProviderError(FundlensError):
    """Remote feature provider failed; retryable."""

    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable
