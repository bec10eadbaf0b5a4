"""Exception and warning hierarchy.

Errors fall into three families so the command line front end can map them
onto process exit codes: configuration problems (2), data problems (3) and
numerical failures (4).
"""


class ClinPredError(Exception):
    exit_code = 1


class ConfigError(ClinPredError):
    exit_code = 2


class DataError(ClinPredError):
    exit_code = 3


class NumericError(ClinPredError):
    exit_code = 4


# -- data ingestion / datasets ------------------------------------------------
class MissingHeader(DataError):
    pass


class MissingData(DataError):
    pass


class NonNumericCell(DataError):
    def __init__(self, row, column, cell):
        super().__init__(f"non-numeric cell {cell!r} at row {row}, column {column!r}")
        self.row = row
        self.column = column
        self.cell = cell


class DuplicateColumnName(DataError):
    pass


class MissingColumn(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class EmptyPartition(DataError):
    pass


class InvalidSpec(ConfigError):
    pass


class InvalidIncidence(ConfigError):
    pass


class DegenerateOutcome(DataError):
    pass


class SingleClass(DegenerateOutcome):
    pass


class TooFewRows(DataError):
    pass


# -- preprocessing ---------------------------------------------------------------
class NonContinuousColumn(DataError):
    pass


class UnknownLevel(DataError):
    pass


class TooFewDonors(DataError):
    pass


class SmoteTooFewMinority(DataError):
    pass


# -- resampling / selection -------------------------------------------------------
class KTooLarge(ConfigError):
    pass


class SizesOutOfRange(ConfigError):
    pass


# -- numerics ---------------------------------------------------------------------
class SingularSystem(NumericError):
    pass


class NonConvergence(NumericError):
    pass


class TargetUnachievable(NumericError):
    pass


class EmptyExpected(NumericError):
    pass


# -- model files ------------------------------------------------------------------
class VersionMismatch(DataError):
    pass


class ChecksumMismatch(DataError):
    pass


class IoError(DataError):
    pass


# -- pipeline ---------------------------------------------------------------------
class FirewallViolation(ClinPredError):
    """Test rows were requested before the final model was frozen."""


# -- warnings ---------------------------------------------------------------------
class ClinPredWarning(UserWarning):
    pass


class ConstantColumnWarning(ClinPredWarning):
    pass


class ConvergenceWarning(ClinPredWarning):
    pass


class SingularDesignWarning(ClinPredWarning):
    pass


class UnknownLevelWarning(ClinPredWarning):
    pass


class ExtrapolationWarning(ClinPredWarning):
    pass


class RankDeficientWarning(ClinPredWarning):
    pass


class ConstantFeatureWarning(ClinPredWarning):
    pass


class MergedGroupWarning(ClinPredWarning):
    pass
