"""Exception hierarchy shared by every stage."""


class CollocativeError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CollocativeError, ValueError):
    """Bad or inconsistent input data (CLI exit status 2)."""


class TooFewSamples(DataError):
    pass


class EmptySegment(DataError):
    pass


class InvalidParams(DataError):
    pass


class NoBeatsDetected(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MissingCovariance(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class EmptyViewList(DataError):
    pass


class StaleCache(CollocativeError):
    pass


class EmptyDataset(DataError):
    pass


class DivergedLoss(CollocativeError, FloatingPointError):
    pass


class CorruptCheckpoint(DataError):
    pass


class VersionMismatch(DataError):
    pass


class EmptyMapList(DataError):
    pass


class RecordMismatch(DataError):
    pass


class EmptyRatings(DataError):
    pass


class MissingGenre(DataError, KeyError):
    pass


class InvalidBounds(DataError):
    pass


class EmptyInput(DataError):
    pass


class TooFewRecords(DataError):
    pass


class UsageError(CollocativeError):
    """Command-line misuse (CLI exit status 1)."""


class UnknownSubcommand(UsageError):
    pass


class ConfigParseError(UsageError):
    pass


class StageError(CollocativeError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
