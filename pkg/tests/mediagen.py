"""Builders for small valid media files used across the test suite."""

import random
import struct


def smooth_bytes(n: int, rng: random.Random, spread: int = 9) -> bytes:
    """A random walk: correlated values that context models can exploit."""
    out = bytearray(n)
    v = rng.randrange(256)
    for i in range(n):
        v = (v + rng.randrange(-spread // 2, spread // 2 + 1)) % 256
        out[i] = v
    return bytes(out)


def make_pgm(width: int, height: int, rng: random.Random, comment: bool = False) -> bytes:
    raster = smooth_bytes(width * height, rng)
    if comment:
        header = b"P5\n# synthetic test image\n%d %d\n255\n" % (width, height)
    else:
        header = b"P5\n%d %d\n255\n" % (width, height)
    return header + raster


def make_ppm(width: int, height: int, rng: random.Random, comment: bool = False) -> bytes:
    raster = smooth_bytes(width * height * 3, rng)
    if comment:
        header = b"P6\n# rgb\n%d  %d\n255\n" % (width, height)
    else:
        header = b"P6\n%d %d\n255\n" % (width, height)
    return header + raster


def make_wav(
    n_samples: int,
    rng: random.Random,
    channels: int = 1,
    sample_rate: int = 16000,
    extra_chunk: bool = False,
    trailing_chunk: bool = False,
) -> bytes:
    pcm = bytearray()
    vals = [0] * channels
    for _ in range(n_samples):
        for c in range(channels):
            vals[c] = max(-32768, min(32767, vals[c] + rng.randint(-900, 900)))
            pcm += struct.pack("<h", vals[c])
    pcm = bytes(pcm)
    block_align = channels * 2
    fmt = struct.pack(
        "<4sIHHIIHH", b"fmt ", 16, 1, channels, sample_rate,
        sample_rate * block_align, block_align, 16,
    )
    chunks = fmt
    if extra_chunk:
        note = b"synthetic fixture"
        chunks += struct.pack("<4sI", b"LIST", len(note)) + note + (b"\x00" if len(note) & 1 else b"")
    chunks += struct.pack("<4sI", b"data", len(pcm)) + pcm
    if len(pcm) & 1:
        chunks += b"\x00"
    if trailing_chunk:
        tail = b"trailing-metadata"
        chunks += struct.pack("<4sI", b"cue ", len(tail)) + tail + (b"\x00" if len(tail) & 1 else b"")
    body = b"WAVE" + chunks
    return struct.pack("<4sI", b"RIFF", len(body)) + body


def make_y4m(
    width: int,
    height: int,
    frames: int,
    rng: random.Random,
    colorspace: str = "420",
    frame_params: bool = False,
) -> bytes:
    if colorspace.startswith("420"):
        chroma = (width // 2) * (height // 2)
    else:
        chroma = width * height
    luma = width * height
    out = bytearray(b"YUV4MPEG2 W%d H%d F25:1 Ip A1:1 C%s\n" % (width, height, colorspace.encode()))
    for i in range(frames):
        if frame_params and i == 0:
            out += b"FRAME Xtest\n"
        else:
            out += b"FRAME\n"
        out += smooth_bytes(luma, rng)
        out += smooth_bytes(chroma, rng)
        out += smooth_bytes(chroma, rng)
    return bytes(out)
