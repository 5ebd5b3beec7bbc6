"""Binary PNM (PGM ``P5`` / PPM ``P6``) parsing, 8-bit only."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnsupportedFormatError

_WS = b" \t\r\n\x0b\x0c"


@dataclass
class PnmImage:
    width: int
    height: int
    channels: int  # 1 for PGM, 3 for PPM
    maxval: int
    raster: bytes  # interleaved, row-major, width*height*channels bytes
    header_bytes: bytes  # original bytes up to the start of the raster


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        b = data[pos : pos + 1]
        if b == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise UnsupportedFormatError("PNM: unterminated comment in header")
            pos = nl + 1
        elif b in _WS:
            pos += 1
        else:
            break
    if pos >= n:
        raise UnsupportedFormatError("PNM: truncated header")
    start = pos
    while pos < n and data[pos : pos + 1] not in _WS and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def parse(data: bytes) -> PnmImage:
    if data[:2] == b"P5":
        channels = 1
    elif data[:2] == b"P6":
        channels = 3
    elif data[:1] == b"P":
        raise UnsupportedFormatError(
            f"PNM: only binary P5/P6 supported, got {data[:2].decode('ascii', 'replace')}"
        )
    else:
        raise UnsupportedFormatError("PNM: bad magic")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise UnsupportedFormatError(f"PNM: non-numeric header field {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise UnsupportedFormatError(f"PNM: bad dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise UnsupportedFormatError(f"PNM: maxval {maxval} unsupported (8-bit only)")
    # Exactly one whitespace byte separates the header from the raster.
    if pos >= len(data) or data[pos : pos + 1] not in _WS:
        raise UnsupportedFormatError("PNM: missing raster separator")
    pos += 1
    raster = data[pos:]
    expected = width * height * channels
    if len(raster) != expected:
        raise UnsupportedFormatError(
            f"PNM: raster is {len(raster)} bytes, expected {expected}"
        )
    return PnmImage(width, height, channels, maxval, raster, data[:pos])


def write(width: int, height: int, channels: int, maxval: int, raster: bytes) -> bytes:
    """Canonical serialization: magic, single-space dimensions, newline separators."""
    magic = b"P5" if channels == 1 else b"P6"
    return magic + b"\n%d %d\n%d\n" % (width, height, maxval) + raster


def canonical_header(width: int, height: int, channels: int, maxval: int) -> bytes:
    return write(width, height, channels, maxval, b"")
