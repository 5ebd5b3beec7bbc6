"""End-to-end compression pipeline: tokenize, model-code per chunk, archive.

Every chunk is coded under a fresh predictor session, so no context crosses
chunk (or plane, or frame) boundaries.  Decompression rebuilds the payload,
inverts the media transform, and verifies the original-file CRC before
returning anything.
"""

from __future__ import annotations

import zlib
from typing import Callable

from . import media as media_mod
from .archive import ParsedArchive, read_archive, write_archive
from .coder import decode_stream, encode_stream
from .errors import ContentChecksumError, TruncatedStreamError, UnknownPredictorError
from .media import MediaPayload, rebuild_plan, sequence_to_media
from .predictors import (
    KIND_EXTERNAL,
    PredictorSession,
    PredictorSpec,
    begin_session,
    resolve_builtin,
)

SessionFactory = Callable[[], PredictorSession]


def compress_payload(payload: MediaPayload, factory: SessionFactory) -> list[bytes]:
    """Range-code each planned chunk under a fresh session."""
    main = payload.main_bytes
    blobs = []
    for off, n in payload.chunk_plan.boundaries:
        session = factory()
        try:
            blobs.append(encode_stream(main[off : off + n], session))
        finally:
            session.end()
    return blobs


def compress_bytes(
    data: bytes,
    spec: PredictorSpec | None = None,
    media: str | None = None,
    chunk_size: int | None = None,
    connection=None,
) -> bytes:
    """Compress a whole file into archive bytes.

    ``connection`` (a :class:`lmz.protocol.PredictorClient`) routes modeling
    to an external service; otherwise ``spec`` names a built-in predictor.
    """
    if media is None:
        media = media_mod.detect_media(data)
    payload = media_mod.to_payload(data, media, chunk_size)
    if connection is not None:
        spec = connection.spec
        factory: SessionFactory = connection.begin_session
    else:
        if spec is None:
            raise ValueError("either spec or connection is required")
        if spec.kind == KIND_EXTERNAL:
            raise UnknownPredictorError(spec.to_string(), "external predictor needs a connection")
        factory = lambda: begin_session(spec)
    blobs = compress_payload(payload, factory)
    return write_archive(payload, spec.to_string(), blobs, zlib.crc32(data))


def _resolve_factory(parsed: ParsedArchive, connection) -> SessionFactory:
    spec = resolve_builtin(parsed.spec_string)
    if spec.kind == KIND_EXTERNAL:
        if connection is None:
            raise UnknownPredictorError(
                parsed.spec_string, "archive needs an external predictor service"
            )
        if connection.version_tag != spec.version_tag:
            raise UnknownPredictorError(
                parsed.spec_string,
                f"service reports version {connection.version_tag!r}, archive wants {spec.version_tag!r}",
            )
        return connection.begin_session
    return lambda: begin_session(spec)


def decompress_bytes(archive: bytes, connection=None) -> bytes:
    """Invert :func:`compress_bytes`; raises on any integrity failure."""
    parsed = read_archive(archive)
    factory = _resolve_factory(parsed, connection)
    pieces = []
    for (n_sym, _), blob in zip(parsed.chunk_table, parsed.chunk_blobs):
        session = factory()
        try:
            pieces.append(bytes(decode_stream(blob, session, n_sym)))
        except TruncatedStreamError as exc:
            # The body CRC already passed, so an undecodable chunk means the
            # archive was rewritten consistently or the predictor mismatches.
            raise ContentChecksumError(f"chunk failed to decode: {exc}") from exc
        finally:
            session.end()
    main = b"".join(pieces)
    plan = rebuild_plan(parsed.media, parsed.meta, parsed.chunk_size, parsed.main_len)
    payload = MediaPayload(parsed.media, main, parsed.side_bits, parsed.meta, plan)
    out = sequence_to_media(payload)
    if zlib.crc32(out) != parsed.original_crc:
        raise ContentChecksumError(
            "decompressed output fails the original-file CRC "
            "(archive damaged or decoded with the wrong predictor)"
        )
    return out


def verify_archive(archive: bytes, connection=None) -> dict:
    """Full decode plus CRC verification; returns summary stats."""
    parsed = read_archive(archive)
    out = decompress_bytes(archive, connection)
    return {
        "media": parsed.media,
        "predictor": parsed.spec_string,
        "chunks": len(parsed.chunk_table),
        "original_bytes": len(out),
        "archive_bytes": len(archive),
    }
