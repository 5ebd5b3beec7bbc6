"""Self-describing archive container.

Byte layout (all integers little-endian, fixed width; see docs/FORMAT.md for
a hex-annotated example)::

    magic            4s   "LMCZ"
    format_version   u32  currently 1
    media            u8   0=text 1=image 2=audio 3=video
    spec_len         u16  predictor spec string length
    spec             ...  ASCII, e.g. "orderK:k=2:S=256:v1"
    meta_len         u32  media metadata blob length
    meta             ...  see lmz.media.pack_meta
    chunk_count      u32
    chunk_table      ...  per chunk: u32 symbol_count, u32 byte_length
    chunk_blobs      ...  concatenated range-coded chunks
    side_len         u32  side bitstream length in bytes
    side_bits        ...
    original_crc     u32  CRC-32 (IEEE) of the original file
    body_crc         u32  CRC-32 of every preceding byte of the archive

Archives are byte-deterministic given (input file, predictor spec).  The
body CRC catches damage to the archive itself; the original-file CRC is
verified after decoding and catches everything else, including decoding
against the wrong predictor.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .errors import (
    BadMagicError,
    BodyChecksumError,
    CorruptPayloadError,
    UnsupportedVersionError,
)
from .media import MEDIA_CODES, MEDIA_NAMES, MediaPayload, pack_meta, unpack_meta

MAGIC = b"LMCZ"
FORMAT_VERSION = 1


@dataclass
class ParsedArchive:
    media: str
    spec_string: str
    meta: object
    chunk_size: int
    main_len: int
    chunk_table: list[tuple[int, int]]  # (symbol_count, byte_length)
    chunk_blobs: list[bytes]
    side_bits: bytes
    original_crc: int


def write_archive(
    payload: MediaPayload,
    spec_string: str,
    chunks: list[bytes],
    original_crc: int,
) -> bytes:
    """Serialize compressed chunks plus everything needed to invert them."""
    plan = payload.chunk_plan
    if len(chunks) != len(plan.boundaries):
        raise ValueError(
            f"{len(chunks)} chunk blobs for a plan of {len(plan.boundaries)} chunks"
        )
    spec_bytes = spec_string.encode("ascii")
    meta_blob = pack_meta(payload)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<IBH", FORMAT_VERSION, MEDIA_CODES[payload.media], len(spec_bytes))
    out += spec_bytes
    out += struct.pack("<I", len(meta_blob))
    out += meta_blob
    out += struct.pack("<I", len(chunks))
    for (_, n_sym), blob in zip(plan.boundaries, chunks):
        out += struct.pack("<II", n_sym, len(blob))
    for blob in chunks:
        out += blob
    out += struct.pack("<I", len(payload.side_bits))
    out += payload.side_bits
    out += struct.pack("<I", original_crc)
    out += struct.pack("<I", zlib.crc32(out))
    return bytes(out)


def read_archive(data: bytes) -> ParsedArchive:
    """Parse and integrity-check an archive; exact inverse of write_archive."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("not an LMCZ archive (bad magic)")
    if len(data) < 15:
        raise BodyChecksumError("archive too short")
    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise BodyChecksumError("archive body CRC mismatch (damaged or truncated)")
    version, media_code, spec_len = struct.unpack_from("<IBH", data, 4)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"archive format version {version} unsupported")
    if media_code not in MEDIA_NAMES:
        raise CorruptPayloadError(f"unknown media code {media_code}")
    media = MEDIA_NAMES[media_code]
    pos = 11
    try:
        spec_string = data[pos : pos + spec_len].decode("ascii")
        pos += spec_len
        (meta_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        meta, chunk_size, main_len = unpack_meta(media, data[pos : pos + meta_len])
        pos += meta_len
        (chunk_count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        table = []
        for _ in range(chunk_count):
            n_sym, n_bytes = struct.unpack_from("<II", data, pos)
            table.append((n_sym, n_bytes))
            pos += 8
        blobs = []
        for _, n_bytes in table:
            blobs.append(data[pos : pos + n_bytes])
            pos += n_bytes
        (side_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        side_bits = data[pos : pos + side_len]
        pos += side_len
        (original_crc,) = struct.unpack_from("<I", data, pos)
        pos += 4
    except struct.error:
        raise CorruptPayloadError("archive fields truncated") from None
    if pos != len(data) - 4:
        raise CorruptPayloadError("archive has trailing or missing bytes")
    if sum(n for n, _ in table) != main_len:
        raise CorruptPayloadError("chunk symbol counts disagree with payload length")
    return ParsedArchive(
        media=media,
        spec_string=spec_string,
        meta=meta,
        chunk_size=chunk_size,
        main_len=main_len,
        chunk_table=table,
        chunk_blobs=blobs,
        side_bits=side_bits,
        original_crc=original_crc,
    )
