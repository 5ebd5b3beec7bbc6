"""Media tokenization: container files to flat symbol sequences and back.

Each supported medium maps to a :class:`MediaPayload` whose ``main_bytes``
are what the pipeline model-codes.  The inverse transform reproduces the
original file byte-exactly: header fields are parsed into metadata and
regenerated canonically, and whenever the original container bytes differ
from the canonical form (comments, extra RIFF chunks, frame parameters) they
are preserved verbatim in the metadata as an override.

Layouts:

* image - PNM raster split into planes (all R, then G, then B; one plane for
  PGM), chunked at 1024 with the chunking restarting at each plane boundary.
* audio - every raw PCM byte is right-shifted by one (main byte in 0..127);
  the dropped low bits form the side bitstream, packed MSB-first, one bit
  per raw byte.  Chunked at 2048.
* video - per frame: Y, U, V planes row-major, chunked at 1024 from the
  start of each frame; no state crosses frames.
* text - bytes unchanged, chunked at 2048.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptPayloadError, UnsupportedFormatError
from .formats import pnm, wav, y4m

MEDIA_TEXT = "text"
MEDIA_IMAGE = "image"
MEDIA_AUDIO = "audio"
MEDIA_VIDEO = "video"

MEDIA_CODES = {MEDIA_TEXT: 0, MEDIA_IMAGE: 1, MEDIA_AUDIO: 2, MEDIA_VIDEO: 3}
MEDIA_NAMES = {v: k for k, v in MEDIA_CODES.items()}

DEFAULT_CHUNK_SIZE = {
    MEDIA_TEXT: 2048,
    MEDIA_IMAGE: 1024,
    MEDIA_AUDIO: 2048,
    MEDIA_VIDEO: 1024,
}

_VIDEO_CS_CODES = {"420": 0, "420jpeg": 1, "420mpeg2": 2, "420paldv": 3, "444": 4}
_VIDEO_CS_NAMES = {v: k for k, v in _VIDEO_CS_CODES.items()}


@dataclass
class ChunkPlan:
    """Non-overlapping (offset, length) cover of the main byte sequence."""

    chunk_size: int
    boundaries: list[tuple[int, int]]

    @classmethod
    def from_segments(cls, segments: list[int], chunk_size: int) -> "ChunkPlan":
        """Chunk each segment independently; only a segment's last chunk may be short."""
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be positive, got {chunk_size}")
        bounds = []
        offset = 0
        for seg in segments:
            pos = 0
            while pos < seg:
                n = min(chunk_size, seg - pos)
                bounds.append((offset + pos, n))
                pos += n
            offset += seg
        return cls(chunk_size, bounds)

    @property
    def total_symbols(self) -> int:
        return sum(n for _, n in self.boundaries)

    def validate_cover(self, total_len: int) -> None:
        pos = 0
        for off, n in self.boundaries:
            if off != pos or n < 1 or n > self.chunk_size:
                raise CorruptPayloadError("chunk plan does not cover the payload exactly")
            pos += n
        if pos != total_len:
            raise CorruptPayloadError(
                f"chunk plan covers {pos} bytes, payload has {total_len}"
            )


@dataclass
class TextMeta:
    n_bytes: int


@dataclass
class ImageMeta:
    width: int
    height: int
    channels: int
    maxval: int
    header_override: bytes | None = None  # original header when non-canonical


@dataclass
class AudioMeta:
    channels: int
    sample_rate: int
    bits_per_sample: int
    n_pcm_bytes: int
    prefix_override: bytes | None = None  # original bytes around the data payload
    suffix_override: bytes | None = None


@dataclass
class VideoMeta:
    width: int
    height: int
    colorspace: str
    frame_count: int
    header_line: bytes
    frame_header_overrides: list[tuple[int, bytes]] = field(default_factory=list)

    def plane_sizes(self) -> tuple[int, int, int]:
        cx, cy = (2, 2) if self.colorspace.startswith("420") else (1, 1)
        luma = self.width * self.height
        chroma = (self.width // cx) * (self.height // cy)
        return luma, chroma, chroma

    @property
    def frame_size(self) -> int:
        return sum(self.plane_sizes())


@dataclass
class VideoFrameMeta:
    """Meta for a single extracted frame (intermediate, not archived)."""

    width: int
    height: int
    colorspace: str
    frame_index: int
    frame_header: bytes


@dataclass
class MediaPayload:
    media: str
    main_bytes: bytes
    side_bits: bytes  # packed MSB-first; audio LSBs, empty otherwise
    meta: object
    chunk_plan: ChunkPlan


# ---------------------------------------------------------------------------
# Forward transforms


def text_to_sequence(data: bytes, chunk_size: int | None = None) -> MediaPayload:
    cs = chunk_size or DEFAULT_CHUNK_SIZE[MEDIA_TEXT]
    plan = ChunkPlan.from_segments([len(data)], cs)
    return MediaPayload(MEDIA_TEXT, data, b"", TextMeta(len(data)), plan)


def image_to_sequence(data: bytes, chunk_size: int | None = None) -> MediaPayload:
    img = pnm.parse(data)
    cs = chunk_size or DEFAULT_CHUNK_SIZE[MEDIA_IMAGE]
    plane_len = img.width * img.height
    if img.channels == 1:
        main = img.raster
    else:
        arr = np.frombuffer(img.raster, dtype=np.uint8).reshape(plane_len, img.channels)
        main = arr.T.tobytes()  # all R, then all G, then all B
    canonical = pnm.canonical_header(img.width, img.height, img.channels, img.maxval)
    override = None if img.header_bytes == canonical else img.header_bytes
    meta = ImageMeta(img.width, img.height, img.channels, img.maxval, override)
    plan = ChunkPlan.from_segments([plane_len] * img.channels, cs)
    return MediaPayload(MEDIA_IMAGE, main, b"", meta, plan)


def audio_to_sequence(data: bytes, chunk_size: int | None = None) -> MediaPayload:
    wf = wav.parse(data)
    cs = chunk_size or DEFAULT_CHUNK_SIZE[MEDIA_AUDIO]
    raw = np.frombuffer(wf.pcm, dtype=np.uint8)
    main = (raw >> 1).tobytes()
    side = np.packbits(raw & 1).tobytes()  # MSB-first, one bit per raw byte
    canonical = wav.write(wf.channels, wf.sample_rate, wf.pcm)
    if wf.prefix + wf.pcm + wf.suffix == canonical:
        prefix = suffix = None
    else:
        prefix, suffix = wf.prefix, wf.suffix
    meta = AudioMeta(wf.channels, wf.sample_rate, 16, len(wf.pcm), prefix, suffix)
    plan = ChunkPlan.from_segments([len(main)], cs)
    return MediaPayload(MEDIA_AUDIO, main, side, meta, plan)


def video_to_sequences(data: bytes, chunk_size: int | None = None) -> list[MediaPayload]:
    """One payload per frame, planes serialized Y then U then V."""
    stream = y4m.parse(data)
    cs = chunk_size or DEFAULT_CHUNK_SIZE[MEDIA_VIDEO]
    payloads = []
    for i, (planes, header) in enumerate(zip(stream.frames, stream.frame_headers)):
        main = b"".join(planes)
        meta = VideoFrameMeta(stream.width, stream.height, stream.colorspace, i, header)
        plan = ChunkPlan.from_segments([len(main)], cs)
        payloads.append(MediaPayload(MEDIA_VIDEO, main, b"", meta, plan))
    return payloads


def video_to_payload(data: bytes, chunk_size: int | None = None) -> MediaPayload:
    """All frames combined into one archivable payload; chunking restarts per frame."""
    stream = y4m.parse(data)
    cs = chunk_size or DEFAULT_CHUNK_SIZE[MEDIA_VIDEO]
    main = b"".join(b"".join(planes) for planes in stream.frames)
    overrides = [
        (i, hdr)
        for i, hdr in enumerate(stream.frame_headers)
        if hdr != b"FRAME\n"
    ]
    meta = VideoMeta(
        stream.width,
        stream.height,
        stream.colorspace,
        len(stream.frames),
        stream.header_line,
        overrides,
    )
    plan = ChunkPlan.from_segments([meta.frame_size] * len(stream.frames), cs)
    return MediaPayload(MEDIA_VIDEO, main, b"", meta, plan)


def to_payload(data: bytes, media: str, chunk_size: int | None = None) -> MediaPayload:
    if media == MEDIA_TEXT:
        return text_to_sequence(data, chunk_size)
    if media == MEDIA_IMAGE:
        return image_to_sequence(data, chunk_size)
    if media == MEDIA_AUDIO:
        return audio_to_sequence(data, chunk_size)
    if media == MEDIA_VIDEO:
        return video_to_payload(data, chunk_size)
    raise UnsupportedFormatError(f"unknown media kind {media!r}")


def detect_media(data: bytes) -> str:
    """Magic-byte sniffing; anything unrecognized is treated as text."""
    if data[:2] in (b"P5", b"P6"):
        return MEDIA_IMAGE
    if data[:4] == b"RIFF" and data[8:12] == b"WAVE":
        return MEDIA_AUDIO
    if data[:9] == y4m.MAGIC:
        return MEDIA_VIDEO
    return MEDIA_TEXT


# ---------------------------------------------------------------------------
# Inverse transform


def sequence_to_media(payload: MediaPayload) -> bytes:
    """Byte-exact reconstruction of the original file from an archived payload."""
    meta = payload.meta
    main = payload.main_bytes
    if payload.media == MEDIA_TEXT:
        if len(main) != meta.n_bytes:
            raise CorruptPayloadError("text payload length disagrees with metadata")
        return main

    if payload.media == MEDIA_IMAGE:
        plane_len = meta.width * meta.height
        if len(main) != plane_len * meta.channels:
            raise CorruptPayloadError("image payload length disagrees with dimensions")
        if meta.channels == 1:
            raster = main
        else:
            arr = np.frombuffer(main, dtype=np.uint8).reshape(meta.channels, plane_len)
            raster = arr.T.tobytes()
        if meta.header_override is not None:
            header = meta.header_override
        else:
            header = pnm.canonical_header(meta.width, meta.height, meta.channels, meta.maxval)
        return header + raster

    if payload.media == MEDIA_AUDIO:
        n = meta.n_pcm_bytes
        if len(main) != n:
            raise CorruptPayloadError("audio payload length disagrees with metadata")
        if len(payload.side_bits) != (n + 7) // 8:
            raise CorruptPayloadError("audio side bitstream has the wrong length")
        arr = np.frombuffer(main, dtype=np.uint8)
        if arr.size and int(arr.max()) > 0x7F:
            raise CorruptPayloadError("audio main byte above 0x7F")
        bits = np.unpackbits(np.frombuffer(payload.side_bits, dtype=np.uint8))[:n]
        pcm = ((arr << 1) | bits).astype(np.uint8).tobytes()
        if meta.prefix_override is not None:
            return meta.prefix_override + pcm + (meta.suffix_override or b"")
        return wav.write(meta.channels, meta.sample_rate, pcm)

    if payload.media == MEDIA_VIDEO:
        luma, chroma, _ = meta.plane_sizes()
        frame_size = meta.frame_size
        if len(main) != frame_size * meta.frame_count:
            raise CorruptPayloadError("video payload length disagrees with geometry")
        overrides = dict(meta.frame_header_overrides)
        parts = [meta.header_line]
        for i in range(meta.frame_count):
            parts.append(overrides.get(i, b"FRAME\n"))
            base = i * frame_size
            parts.append(main[base : base + frame_size])
        return b"".join(parts)

    raise UnsupportedFormatError(f"unknown media kind {payload.media!r}")


# ---------------------------------------------------------------------------
# Metadata serialization (archive meta blob)


def _pack_blob(b: bytes | None) -> bytes:
    if b is None:
        return struct.pack("<B", 0)
    return struct.pack("<BI", 1, len(b)) + b


def _unpack_blob(data: bytes, pos: int) -> tuple[bytes | None, int]:
    (flag,) = struct.unpack_from("<B", data, pos)
    pos += 1
    if not flag:
        return None, pos
    (n,) = struct.unpack_from("<I", data, pos)
    pos += 4
    return data[pos : pos + n], pos + n


def pack_meta(payload: MediaPayload) -> bytes:
    """Canonical little-endian serialization of chunking and media metadata."""
    head = struct.pack("<IQ", payload.chunk_plan.chunk_size, len(payload.main_bytes))
    meta = payload.meta
    if payload.media == MEDIA_TEXT:
        return head
    if payload.media == MEDIA_IMAGE:
        return (
            head
            + struct.pack("<IIBB", meta.width, meta.height, meta.channels, meta.maxval)
            + _pack_blob(meta.header_override)
        )
    if payload.media == MEDIA_AUDIO:
        return (
            head
            + struct.pack(
                "<HIHQ", meta.channels, meta.sample_rate, meta.bits_per_sample, meta.n_pcm_bytes
            )
            + _pack_blob(meta.prefix_override)
            + _pack_blob(meta.suffix_override)
        )
    if payload.media == MEDIA_VIDEO:
        out = head + struct.pack(
            "<IIBI",
            meta.width,
            meta.height,
            _VIDEO_CS_CODES[meta.colorspace],
            meta.frame_count,
        )
        out += struct.pack("<H", len(meta.header_line)) + meta.header_line
        out += struct.pack("<I", len(meta.frame_header_overrides))
        for idx, hdr in meta.frame_header_overrides:
            out += struct.pack("<IH", idx, len(hdr)) + hdr
        return out
    raise UnsupportedFormatError(f"unknown media kind {payload.media!r}")


def unpack_meta(media: str, blob: bytes) -> tuple[object, int, int]:
    """Inverse of :func:`pack_meta` -> (meta, chunk_size, main_len)."""
    try:
        chunk_size, main_len = struct.unpack_from("<IQ", blob, 0)
        pos = 12
        if media == MEDIA_TEXT:
            return TextMeta(main_len), chunk_size, main_len
        if media == MEDIA_IMAGE:
            w, h, ch, maxval = struct.unpack_from("<IIBB", blob, pos)
            pos += 10
            override, pos = _unpack_blob(blob, pos)
            return ImageMeta(w, h, ch, maxval, override), chunk_size, main_len
        if media == MEDIA_AUDIO:
            ch, rate, bits, n_pcm = struct.unpack_from("<HIHQ", blob, pos)
            pos += 16
            prefix, pos = _unpack_blob(blob, pos)
            suffix, pos = _unpack_blob(blob, pos)
            return AudioMeta(ch, rate, bits, n_pcm, prefix, suffix), chunk_size, main_len
        if media == MEDIA_VIDEO:
            w, h, cs_code, frames = struct.unpack_from("<IIBI", blob, pos)
            pos += 13
            (hlen,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            header_line = blob[pos : pos + hlen]
            pos += hlen
            (n_over,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            overrides = []
            for _ in range(n_over):
                idx, n = struct.unpack_from("<IH", blob, pos)
                pos += 6
                overrides.append((idx, blob[pos : pos + n]))
                pos += n
            meta = VideoMeta(w, h, _VIDEO_CS_NAMES[cs_code], frames, header_line, overrides)
            return meta, chunk_size, main_len
    except (struct.error, KeyError) as exc:
        raise CorruptPayloadError(f"bad media metadata blob: {exc}") from None
    raise UnsupportedFormatError(f"unknown media kind {media!r}")


def rebuild_plan(media: str, meta: object, chunk_size: int, main_len: int) -> ChunkPlan:
    """Recompute the deterministic chunk plan an archive's payload was coded with."""
    if media == MEDIA_IMAGE:
        segments = [meta.width * meta.height] * meta.channels
    elif media == MEDIA_VIDEO:
        segments = [meta.frame_size] * meta.frame_count
    else:
        segments = [main_len]
    plan = ChunkPlan.from_segments(segments, chunk_size)
    plan.validate_cover(main_len)
    return plan
