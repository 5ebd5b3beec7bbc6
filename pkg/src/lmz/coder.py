"""Bit-exact integer range coder.

Byte-wise renormalization with a 32-bit range and a 64-bit low accumulator;
carries propagate into already-emitted bytes, which therefore stay in a
mutable buffer until :meth:`RangeEncoder.finish`.  The coder consumes
:class:`~lmz.distribution.QuantizedDistribution` tables (total fixed at
65536) and nothing else.

The decoder cannot detect a distribution mismatch: feeding it tables that
differ from the encoder's produces garbage symbols, not an error, by design.
Stream integrity lives in the archive container's checksums.  Symbol counts
are likewise carried out of band; there is no end-of-stream symbol.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .distribution import TOTAL, QuantizedDistribution
from .errors import CoderError, TruncatedStreamError

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
_FLUSH_BYTES = 8


class RangeEncoder:
    """Encodes one symbol at a time against caller-supplied tables."""

    def __init__(self):
        self._low = 0
        self._range = _MASK32
        self._out = bytearray()
        self._finished = False

    def encode(self, dist: QuantizedDistribution, symbol: int) -> None:
        if self._finished:
            raise CoderError("encoder already finished")
        if not 0 <= symbol < dist.alphabet_size:
            raise CoderError(f"symbol {symbol} outside alphabet of size {dist.alphabet_size}")
        cum_lo, freq = dist.span(symbol)
        r = self._range // TOTAL
        self._low += cum_lo * r
        self._range = freq * r
        if self._low > _MASK32:
            # Carry: increment the emitted bytes.  It cannot run off the
            # front: the value (out || low) always stays below 2^(8k+32).
            self._low &= _MASK32
            i = len(self._out) - 1
            while self._out[i] == 0xFF:
                self._out[i] = 0
                i -= 1
            self._out[i] += 1
        while self._range < _TOP:
            self._out.append((self._low >> 24) & 0xFF)
            self._low = (self._low << 8) & _MASK32
            self._range <<= 8

    def finish(self) -> bytes:
        """Flush and return the code bytes.  Always appends 8 final bytes."""
        if self._finished:
            raise CoderError("encoder already finished")
        self._finished = True
        for _ in range(_FLUSH_BYTES):
            self._out.append((self._low >> 24) & 0xFF)
            self._low = (self._low << 8) & _MASK32
        return bytes(self._out)


class RangeDecoder:
    """Decodes symbols from a code stream, mirroring :class:`RangeEncoder`.

    Raises :class:`TruncatedStreamError` when more code bytes are needed than
    provided.  Truncation inside the final flush slack (up to 4 bytes) is
    undetectable here; the container CRC catches it.
    """

    def __init__(self, code: bytes):
        if len(code) < 4:
            raise TruncatedStreamError(f"code stream has {len(code)} bytes, need at least 4")
        self._code = int.from_bytes(code[:4], "big")
        self._pos = 4
        self._data = code
        self._range = _MASK32

    def decode(self, dist: QuantizedDistribution) -> int:
        r = self._range // TOTAL
        v = self._code // r
        if v >= TOTAL:  # dead zone from range truncation; valid streams never land here
            v = TOTAL - 1
        cum = dist.cumulative()
        symbol = int(np.searchsorted(cum, v, side="right")) - 1
        lo = int(cum[symbol])
        self._code -= lo * r
        self._range = (int(cum[symbol + 1]) - lo) * r
        while self._range < _TOP:
            if self._pos >= len(self._data):
                raise TruncatedStreamError("code stream exhausted mid-decode")
            self._code = ((self._code << 8) | self._data[self._pos]) & ((1 << 56) - 1)
            self._pos += 1
            self._range <<= 8
        return symbol


class _Source:
    """Adapts a distribution source: an iterable of tables or a predictor
    session (anything with predict/observe)."""

    def __init__(self, dists):
        if hasattr(dists, "predict") and hasattr(dists, "observe"):
            self._session = dists
            self._iter = None
        else:
            self._session = None
            self._iter = iter(dists)

    def next_dist(self) -> QuantizedDistribution:
        if self._session is not None:
            return self._session.predict()
        try:
            return next(self._iter)
        except StopIteration:
            raise CoderError("distribution source exhausted before the symbol stream") from None

    def push(self, symbol: int) -> None:
        if self._session is not None:
            self._session.observe(symbol)


def encode_stream(symbols: Sequence[int] | Iterable[int], dists) -> bytes:
    """Encode ``symbols`` against one distribution per position.

    ``dists`` is either an iterable yielding one table per symbol or a
    predictor session, in which case each symbol is observed after encoding
    so the tables condition on the prefix.
    """
    src = _Source(dists)
    enc = RangeEncoder()
    for sym in symbols:
        d = src.next_dist()
        enc.encode(d, sym)
        src.push(sym)
    return enc.finish()


def decode_stream(code: bytes, dists, n: int) -> list[int]:
    """Inverse of :func:`encode_stream`; returns exactly ``n`` symbols.

    ``dists`` must yield tables bit-identical to the ones used to encode, in
    the same order.  ``n == 0`` returns an empty list without touching
    ``code``.
    """
    if n == 0:
        return []
    src = _Source(dists)
    dec = RangeDecoder(code)
    out = []
    for _ in range(n):
        d = src.next_dist()
        sym = dec.decode(d)
        out.append(sym)
        src.push(sym)
    return out


def ideal_code_length(symbols: Sequence[int] | Iterable[int], dists) -> float:
    """Shannon information of the stream under the supplied tables, in bits.

    Pure function: sums ``-log2(freq/65536)`` per position.  The encoder's
    output is guaranteed within 64 bits of this total for the chunk-sized
    streams the pipeline produces.
    """
    src = _Source(dists)
    log2_total = math.log2(TOTAL)
    bits = 0.0
    for sym in symbols:
        d = src.next_dist()
        if not 0 <= sym < d.alphabet_size:
            raise CoderError(f"symbol {sym} outside alphabet of size {d.alphabet_size}")
        bits += log2_total - math.log2(int(d.freqs[sym]))
        src.push(sym)
    return bits
