"""Exception hierarchy.

Every error carries a short ``kind`` used by the CLI to print
``error: <kind>: <detail>``.
"""


class CuratorError(Exception):
    kind = "Error"


# tensor store
class RejectedValue(CuratorError, ValueError):
    kind = "RejectedValue"


class BadMagic(CuratorError, ValueError):
    kind = "BadMagic"


class TruncatedFile(CuratorError, ValueError):
    kind = "TruncatedFile"


class IndexMismatch(CuratorError, ValueError):
    kind = "IndexMismatch"


# ledger
class OutOfOrderEpoch(CuratorError, ValueError):
    kind = "OutOfOrderEpoch"


class NonFiniteLoss(CuratorError, ValueError):
    kind = "NonFiniteLoss"


class KTooLarge(CuratorError, ValueError):
    kind = "KTooLarge"


class MalformedRow(CuratorError, ValueError):
    kind = "MalformedRow"


class EmptyLedger(CuratorError, ValueError):
    kind = "EmptyLedger"


# stopping
class ObserveAfterStop(CuratorError, RuntimeError):
    kind = "ObserveAfterStop"


# averaging
class UnknownEndpoint(CuratorError, ValueError):
    kind = "UnknownEndpoint"


class IncompatibleCheckpoints(CuratorError, ValueError):
    kind = "IncompatibleCheckpoints"


class EmptyList(CuratorError, ValueError):
    kind = "EmptyList"


class MissingCheckpoint(CuratorError, FileNotFoundError):
    kind = "MissingCheckpoint"


# toy trainer
class SizeTooLarge(CuratorError, ValueError):
    kind = "SizeTooLarge"


class DimensionMismatch(CuratorError, ValueError):
    kind = "DimensionMismatch"


class DivergedTraining(CuratorError, RuntimeError):
    kind = "DivergedTraining"


class ConfigError(CuratorError, ValueError):
    kind = "ConfigError"


# bias-variance oracle
class EmptyEnsemble(CuratorError, ValueError):
    kind = "EmptyEnsemble"


class NonDistribution(CuratorError, ValueError):
    kind = "NonDistribution"


class MismatchedEpochs(CuratorError, ValueError):
    kind = "MismatchedEpochs"


# run directory
class VerifyFailed(CuratorError):
    kind = "VerifyFailed"
