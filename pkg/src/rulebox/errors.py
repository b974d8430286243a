"""Exception types shared across the toolkit."""


class RuleboxError(Exception):
    """Base class for all toolkit errors."""


class ParseError(RuleboxError):
    """A cell of an input file failed to parse.

    Carries 1-based row/column coordinates of the offending cell (header
    row counts as row 1).
    """

    def __init__(self, message, row=None, column=None):
        if row is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)
        self.row = row
        self.column = column


class NonFiniteValue(ParseError):
    """A data cell parsed but is NaN or infinite."""


class EmptyDataset(RuleboxError):
    """The input file contains no data rows or no attribute columns."""


class DegenerateSplit(RuleboxError):
    """A requested train/test split would leave one side empty."""


class SingleClassTraining(RuleboxError):
    """Forest training needs at least two distinct labels."""


class InsufficientData(RuleboxError):
    """Fewer training rows than the minimum leaf size."""


class OracleFailure(RuleboxError):
    """The external prediction oracle died, timed out, or replied garbage."""


class SpawnFailure(OracleFailure):
    """The oracle command could not be started."""


class HandshakeFailure(OracleFailure):
    """The oracle did not complete the HELLO/READY handshake."""


class NoUsableFeatures(RuleboxError):
    """Every attribute is constant; no interpretable features exist."""


class IndexOutOfRange(RuleboxError, IndexError):
    """A feature index is outside the catalog."""


class RankTooLarge(RuleboxError):
    """Requested factorization rank exceeds min(2M, N)."""


class TooManyClusters(RuleboxError):
    """Requested more clusters than there are points."""


class EmptyGrid(RuleboxError):
    """The hyperparameter search was given an empty grid."""


class ConfigError(RuleboxError):
    """A run configuration file is malformed or inconsistent."""
