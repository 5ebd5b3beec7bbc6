"""RIFF/WAVE parsing for 16-bit PCM, preserving non-audio bytes verbatim."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import UnsupportedFormatError


@dataclass
class WavFile:
    channels: int
    sample_rate: int
    bits_per_sample: int  # always 16 here
    pcm: bytes  # the data chunk payload, little-endian samples
    prefix: bytes  # file bytes before the data payload (RIFF/fmt/other chunks)
    suffix: bytes  # file bytes after the data payload (pad byte, trailing chunks)


def parse(data: bytes) -> WavFile:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormatError("WAV: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data_span = None
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if body + size > len(data):
            raise UnsupportedFormatError(f"WAV: chunk {cid!r} overruns the file")
        if cid == b"fmt " and fmt is None:
            if size < 16:
                raise UnsupportedFormatError("WAV: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", data, body)
        elif cid == b"data" and data_span is None:
            data_span = (body, body + size)
        pos = body + size + (size & 1)  # chunks are word-aligned
    if fmt is None or data_span is None:
        raise UnsupportedFormatError("WAV: missing fmt or data chunk")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormatError(f"WAV: only PCM supported, format code {audio_format}")
    if bits != 16:
        raise UnsupportedFormatError(f"WAV: only 16-bit samples supported, got {bits}")
    if channels < 1:
        raise UnsupportedFormatError("WAV: zero channels")
    start, end = data_span
    return WavFile(
        channels=channels,
        sample_rate=sample_rate,
        bits_per_sample=16,
        pcm=data[start:end],
        prefix=data[:start],
        suffix=data[end:],
    )


def write(channels: int, sample_rate: int, pcm: bytes) -> bytes:
    """Canonical minimal PCM16 file: RIFF + 16-byte fmt + data (+ pad byte)."""
    block_align = channels * 2
    byte_rate = sample_rate * block_align
    fmt = struct.pack("<4sIHHIIHH", b"fmt ", 16, 1, channels, sample_rate, byte_rate, block_align, 16)
    data_hdr = struct.pack("<4sI", b"data", len(pcm))
    pad = b"\x00" if len(pcm) & 1 else b""
    body = b"WAVE" + fmt + data_hdr + pcm + pad
    return struct.pack("<4sI", b"RIFF", len(body)) + body
