"""Typed errors shared across the engine.

Every failure carries a stable machine-readable ``code`` so the CLI can print
one-line diagnostics and tests can assert on the exact failure kind.  Errors
split into two exit categories: configuration/data problems (exit code 1) and
file I/O or format problems (exit code 2).
"""

from __future__ import annotations


class LefcertError(Exception):
    """Base class. ``code`` identifies the failure, ``exit_code`` the CLI exit."""

    code = "ERROR"
    exit_code = 1

    def __init__(self, message: str = ""):
        self.message = message
        super().__init__(f"{self.code}: {message}" if message else self.code)


class ConfigError(LefcertError):
    """Invalid parameters, invalid combinations, or guards tripped."""

    code = "CONFIG_INVALID"
    exit_code = 1


class DataError(LefcertError):
    """Structurally invalid in-memory inputs (episodes, bundles, sample sets)."""

    exit_code = 1


class FileError(LefcertError):
    """Unreadable, unparseable, or unwritable files."""

    exit_code = 2


# -- configuration ----------------------------------------------------------

class MTooLargeError(ConfigError):
    code = "M_TOO_LARGE"


class BudgetExceedsKError(ConfigError):
    code = "BUDGET_EXCEEDS_K"


class ConfigTooLargeError(ConfigError):
    code = "CONFIG_TOO_LARGE"


class NonpositiveSigmaError(ConfigError):
    code = "NONPOSITIVE_SIGMA"


class WrongThreatKindError(ConfigError):
    code = "WRONG_THREAT_KIND"


class InvalidParameterError(ConfigError):
    code = "INVALID_PARAMETER"


class TableTooSmallError(ConfigError):
    code = "TABLE_TOO_SMALL"


# -- data -------------------------------------------------------------------

class ShapeMismatchError(DataError):
    code = "SHAPE_MISMATCH"


class LabelOutOfRangeError(DataError):
    code = "LABEL_OUT_OF_RANGE"


class DimMismatchError(DataError):
    code = "DIM_MISMATCH"


class ZeroVectorError(DataError):
    code = "ZERO_VECTOR"


class NormViolationError(DataError):
    code = "NORM_VIOLATION"


class EmptySetError(DataError):
    code = "EMPTY_SET"


class PoolTooSmallError(DataError):
    code = "POOL_TOO_SMALL"


class AnchorSamplingFailedError(DataError):
    code = "ANCHOR_SAMPLING_FAILED"


# -- files ------------------------------------------------------------------

class BadMagicError(FileError):
    code = "BAD_MAGIC"


class VersionUnsupportedError(FileError):
    code = "VERSION_UNSUPPORTED"


class TruncatedError(FileError):
    code = "TRUNCATED"


class TrailingBytesError(FileError):
    code = "TRAILING_BYTES"


class IoFailureError(FileError):
    code = "IO_FAILURE"
