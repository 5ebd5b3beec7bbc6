"""YUV4MPEG2 stream parsing, 8-bit 4:2:0 and 4:4:4 progressive only."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnsupportedFormatError

MAGIC = b"YUV4MPEG2"

# Accepted colorspace tags and their chroma subsampling (x, y divisors).
_COLORSPACES = {
    b"420": (2, 2),
    b"420jpeg": (2, 2),
    b"420mpeg2": (2, 2),
    b"420paldv": (2, 2),
    b"444": (1, 1),
}


@dataclass
class Y4mStream:
    width: int
    height: int
    colorspace: str  # "420" family or "444"
    header_line: bytes  # full stream header line including trailing newline
    frame_headers: list  # one header line per frame, including newline
    frames: list  # one (y, u, v) tuple of plane bytes per frame

    @property
    def frame_size(self) -> int:
        return sum(self.plane_sizes())

    def plane_sizes(self) -> tuple[int, int, int]:
        cx, cy = _COLORSPACES[self.colorspace.encode()]
        luma = self.width * self.height
        chroma = (self.width // cx) * (self.height // cy)
        return luma, chroma, chroma


def parse(data: bytes) -> Y4mStream:
    nl = data.find(b"\n")
    if nl < 0 or not data.startswith(MAGIC):
        raise UnsupportedFormatError("Y4M: bad stream header")
    header_line = data[: nl + 1]
    width = height = None
    colorspace = "420jpeg"  # container default when no C tag is present
    for param in header_line[len(MAGIC) : -1].split(b" "):
        if not param:
            continue
        tag, val = param[:1], param[1:]
        if tag == b"W":
            width = int(val)
        elif tag == b"H":
            height = int(val)
        elif tag == b"I":
            if val not in (b"p", b"?"):
                raise UnsupportedFormatError(f"Y4M: interlaced streams unsupported (I{val.decode('ascii', 'replace')})")
        elif tag == b"C":
            if val not in _COLORSPACES:
                raise UnsupportedFormatError(
                    f"Y4M: colorspace C{val.decode('ascii', 'replace')} unsupported (8-bit 420/444 only)"
                )
            colorspace = val.decode("ascii")
    if not width or not height:
        raise UnsupportedFormatError("Y4M: missing W or H in stream header")
    cx, cy = _COLORSPACES[colorspace.encode()]
    if width % cx or height % cy:
        raise UnsupportedFormatError(
            f"Y4M: {width}x{height} not divisible by the {colorspace} chroma grid"
        )
    stream = Y4mStream(width, height, colorspace, header_line, [], [])
    luma, chroma, _ = stream.plane_sizes()
    frame_size = luma + 2 * chroma

    pos = nl + 1
    while pos < len(data):
        fnl = data.find(b"\n", pos)
        if fnl < 0 or not data[pos:].startswith(b"FRAME"):
            raise UnsupportedFormatError("Y4M: bad frame header")
        frame_header = data[pos : fnl + 1]
        body = fnl + 1
        if body + frame_size > len(data):
            raise UnsupportedFormatError("Y4M: truncated frame data")
        y = data[body : body + luma]
        u = data[body + luma : body + luma + chroma]
        v = data[body + luma + chroma : body + frame_size]
        stream.frame_headers.append(frame_header)
        stream.frames.append((y, u, v))
        pos = body + frame_size
    return stream


def write(stream: Y4mStream) -> bytes:
    """Reassemble the stream verbatim from its header lines and planes."""
    parts = [stream.header_line]
    for header, (y, u, v) in zip(stream.frame_headers, stream.frames):
        parts.append(header)
        parts.append(y)
        parts.append(u)
        parts.append(v)
    return b"".join(parts)
