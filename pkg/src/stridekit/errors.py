"""Exception hierarchy. Every library-raised error derives from StridekitError."""

from __future__ import annotations


class StridekitError(Exception):
    pass


# -- series construction / validation ----------------------------------------

class NonMonotonicIndex(StridekitError):
    pass


class LengthMismatch(StridekitError):
    pass


class ReservedCharacterInName(StridekitError):
    pass


class EmptyName(StridekitError):
    pass


class KindMismatch(StridekitError):
    pass


class TooShort(StridekitError):
    pass


class DuplicateSeriesName(StridekitError):
    pass


class UnknownSeries(StridekitError):
    pass


# -- segmentation ------------------------------------------------------------

class NonPositiveWindow(StridekitError):
    pass


class NonPositiveStride(StridekitError):
    pass


class EmptySeries(StridekitError):
    pass


class DisjointSpans(StridekitError):
    pass


# -- feature registry / extraction -------------------------------------------

class DuplicateFeature(StridekitError):
    pass


class InvalidDescriptor(StridekitError):
    pass


class EmptyAxis(StridekitError):
    pass


class MalformedName(StridekitError):
    pass


class UnknownColumn(StridekitError):
    pass


class FunctionFailure(StridekitError):
    pass


class NonFloatOutput(StridekitError):
    pass


class UnknownBuiltin(StridekitError):
    pass


class BadParam(StridekitError):
    pass


# -- processing pipelines ----------------------------------------------------

class StepFailure(StridekitError):
    pass


class DynamicStepUnresolvable(StridekitError):
    pass


# -- chunking ----------------------------------------------------------------

class BadSpec(StridekitError):
    pass


# -- io / config -------------------------------------------------------------

class ParseError(StridekitError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class DuplicateHeader(StridekitError):
    pass


class ConfigError(StridekitError):
    pass


class IoError(StridekitError):
    """File could not be read or written (wraps the OS-level failure)."""
