"""Exception hierarchy shared by all lmz modules."""


class LmzError(Exception):
    """Base class for every error raised by this package."""


class DistributionError(LmzError):
    """A frequency table violates the quantized-distribution invariants."""


class CoderError(LmzError):
    """Range coder misuse: bad symbol ids or a broken code stream."""


class TruncatedStreamError(CoderError):
    """The decoder ran out of code bytes before producing all symbols."""


class PredictorStateError(LmzError):
    """predict/observe called out of order on a predictor session."""


class UnknownPredictorError(LmzError):
    """A predictor spec string names no predictor this build knows."""

    def __init__(self, spec_string: str, reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"unknown predictor {spec_string!r}{detail}")
        self.spec_string = spec_string


class UnsupportedFormatError(LmzError):
    """The input file is not one of the supported media containers."""


class CorruptPayloadError(LmzError):
    """Media payload metadata disagrees with the byte content."""


class ArchiveError(LmzError):
    """Base class for archive parsing failures."""


class BadMagicError(ArchiveError):
    """The archive does not start with the expected magic bytes."""


class UnsupportedVersionError(ArchiveError):
    """The archive format version is newer than this build understands."""


class BodyChecksumError(ArchiveError):
    """The archive body failed its CRC; the file is damaged or truncated."""


class ContentChecksumError(ArchiveError):
    """Decompressed output failed the original-file CRC."""


class WireProtocolError(LmzError):
    """The remote predictor endpoint violated the wire protocol."""

    def __init__(self, message: str, code: int | None = None):
        super().__init__(message)
        self.code = code


class HandshakeError(WireProtocolError):
    """Version negotiation with the predictor service failed."""


class TransportError(LmzError):
    """The predictor service connection timed out or dropped."""
