"""Exception types shared across the pipeline."""


class PCRiskError(Exception):
    """Base class for all pcrisk errors."""


class InvalidInputError(PCRiskError):
    """Caller passed a value that violates a precondition (bad bbox, inverted window, ...)."""


class OutOfBoundsError(PCRiskError):
    """A point or cell falls outside the grid."""


class SchemaError(PCRiskError):
    """An input file is missing a mapped column or has an unusable layout."""


class DuplicateTimestampError(PCRiskError):
    """A cell series contains two samples with the same timestamp."""


class MissingVariableError(PCRiskError):
    """No finite samples exist for a required environmental variable."""


class InsufficientDataError(PCRiskError):
    """Too few samples (or a single class) for the requested statistic."""


class UndefinedTestError(PCRiskError):
    """A contingency table has a zero margin, so the exact test is undefined."""


class DegeneratePartitionError(PCRiskError):
    """A hypothesis predicate selects every cell or no cell."""


class StratificationError(PCRiskError):
    """A class is too small to appear on both sides of a stratified split."""


class NonConvergenceError(PCRiskError):
    """Iterative training diverged; carries the last observed loss."""

    def __init__(self, message, last_loss=None):
        super().__init__(message)
        self.last_loss = last_loss


class ValidationError(PCRiskError):
    """An output artifact failed its own validity check before writing."""
