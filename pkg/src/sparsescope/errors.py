"""Exception taxonomy shared across the package.

DataError subclasses signal problems with user-supplied data; UsageError
signals bad parameters.  The CLI maps these onto distinct exit codes.
"""


class SparseScopeError(Exception):
    """Base class for all package errors."""


class UsageError(SparseScopeError):
    """Invalid parameters or flags."""


class DataError(SparseScopeError):
    """Invalid or insufficient input data."""


class ParseError(DataError):
    """Malformed CSV content (ragged row or non-numeric cell)."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class SchemaError(DataError):
    """Malformed CSV header (duplicate or missing names)."""


class EmptyInput(DataError):
    """Operation requires a nonempty table."""


class EmptyColumn(DataError):
    """Column has no observed values."""

    def __init__(self, name):
        super().__init__(f"column {name!r} has no observed values")
        self.name = name


class SpecError(UsageError):
    """Invalid synthetic-dataset specification."""


class EmptyResult(DataError):
    """Threshold filtering removed every column."""


class EmptyCandidates(DataError):
    """Similarity search received no candidate rows."""


class ImputeError(DataError):
    """A target column could not be imputed."""

    def __init__(self, column, message=None):
        super().__init__(message or f"cannot impute column {column!r}")
        self.column = column


class InputError(DataError):
    """NaN or otherwise unusable values in model inputs."""


class ShapeError(DataError):
    """Dimension mismatch between model and query."""


class UndefinedRSD(DataError):
    """Relative standard deviation is undefined at mu = 0."""


class UndefinedMAPE(DataError):
    """MAPE is undefined when every reference entry is 0."""


class RankError(DataError):
    """Requested autoencoder rank exceeds the data rank."""


class InsufficientData(DataError):
    """Too few labeled rows for the evaluation protocol."""


class TooManyFeatures(UsageError):
    """Exact Shapley enumeration is capped at 12 features."""


class UndefinedCorrelation(DataError):
    """Correlation against a constant attribute is undefined."""


class TooManyKeyAttrs(UsageError):
    """More than 15 key attributes would leave no room for factor bars."""


class PerplexityError(UsageError):
    """Perplexity too large for the number of points."""


class StageFailure(SparseScopeError):
    """A session-build stage failed; carries the stage name for reporting."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class BusyError(SparseScopeError):
    """A long-running job for this session is already in flight."""


class GeometryError(DataError):
    """Polygon input violates a geometric precondition."""


class AssignmentError(DataError):
    """A layout point has no containing polygon."""
