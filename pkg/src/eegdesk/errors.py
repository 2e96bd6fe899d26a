"""Typed errors shared across the engine.

Every failure mode callers are expected to handle gets its own class so
tool dispatch can turn it into a structured observation instead of a bare
traceback.
"""

from __future__ import annotations


class EegDeskError(Exception):
    """Base class for all engine errors."""


# --- EDF parsing ------------------------------------------------------------


class MalformedHeaderError(EegDeskError):
    """Header bytes violate the EDF fixed layout (bad magic, lengths, fields)."""


class TruncatedDataError(EegDeskError):
    """Fewer data-record bytes present than the header declares."""


class UnsupportedVariantError(EegDeskError):
    """Recognized but unsupported container (e.g. 24-bit BDF)."""


# --- recording / segment access ---------------------------------------------


class OutOfRangeError(EegDeskError):
    """Requested time window falls outside the recording."""


class UnknownChannelError(EegDeskError):
    """Channel label not present in the recording."""


# --- feature extraction -----------------------------------------------------


class WindowTooLongError(EegDeskError):
    """Segment exceeds the 60 s cap of the statistical tools."""


class EmptySegmentError(EegDeskError):
    """Segment resolves to zero samples."""


class SegmentTooShortError(EegDeskError):
    """Segment too short for a spectral estimate (< 2 s)."""


class NoPairsError(EegDeskError):
    """No homologous left-right channel pair present in the segment."""


class NoResultsError(EegDeskError):
    """Fusion called with zero successful tool results."""


# --- montage ----------------------------------------------------------------


class UnknownElectrodeError(EegDeskError):
    """Electrode name not covered by the 10-20 region table."""


# --- classifiers ------------------------------------------------------------


class GranularityMismatchError(EegDeskError):
    """Window duration incompatible with the tool's declared granularity."""


class UnknownToolError(EegDeskError):
    """Tool name not present in the registry."""


class BackendUnavailableError(EegDeskError):
    """Remote backend timed out, refused, or answered with a non-200."""


# --- knowledge --------------------------------------------------------------


class EmptyBaseError(EegDeskError):
    """Retrieval attempted against an empty knowledge base."""


class AgeUnknownError(EegDeskError):
    """Age-band lookup requested but the recording carries no age."""


# --- agent loop -------------------------------------------------------------


class ArgumentValidationError(EegDeskError):
    """Tool-call arguments fail schema or granularity validation."""


class MalformedActionError(EegDeskError):
    """Policy emitted an action the loop cannot parse."""


class PolicyProtocolError(EegDeskError):
    """Policy produced malformed actions twice in a row."""


class UnknownSessionError(EegDeskError):
    """Session id has no stored memory."""


# --- persistence ------------------------------------------------------------


class CorruptRecordError(EegDeskError):
    """Stored artifact failed to decode; it has been quarantined."""


class StorageFullError(EegDeskError):
    """Store root cannot accept further writes."""
