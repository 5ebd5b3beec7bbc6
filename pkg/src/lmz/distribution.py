"""Quantized next-symbol distributions.

Every probability the range coder ever sees is a vector of positive integer
frequencies summing to exactly ``TOTAL`` (65536).  Predictors produce them via
:func:`quantize_distribution`, which is a fully deterministic integer
algorithm so that encoder and decoder obtain bit-identical tables on any
platform.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DistributionError

TOTAL = 65536
MAX_ALPHABET = 65536

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*a, **kw):
        def deco(fn):
            return fn

        return deco


class QuantizedDistribution:
    """Integer frequency table over a fixed alphabet, total always 65536.

    Invariants (checked on construction): every frequency >= 1, the sum is
    exactly ``TOTAL``, and the alphabet holds at most ``MAX_ALPHABET``
    symbols.  Instances are immutable by convention; the cumulative table is
    computed lazily and shared.
    """

    __slots__ = ("freqs", "_cum")

    def __init__(self, freqs):
        arr = np.asarray(freqs, dtype=np.int64)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise DistributionError("frequency table must be a non-empty 1-d sequence")
        if arr.shape[0] > MAX_ALPHABET:
            raise DistributionError(f"alphabet size {arr.shape[0]} exceeds {MAX_ALPHABET}")
        if arr.min() < 1:
            raise DistributionError("every symbol frequency must be >= 1")
        total = int(arr.sum())
        if total != TOTAL:
            raise DistributionError(f"frequencies sum to {total}, expected {TOTAL}")
        self.freqs = arr
        self._cum = None

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "QuantizedDistribution":
        # Internal constructor for tables already proven valid (quantizer output).
        self = object.__new__(cls)
        self.freqs = arr
        self._cum = None
        return self

    @property
    def alphabet_size(self) -> int:
        return self.freqs.shape[0]

    def cumulative(self) -> np.ndarray:
        """Cumulative frequencies, length ``alphabet_size + 1``, cum[0] == 0."""
        if self._cum is None:
            cum = np.empty(self.freqs.shape[0] + 1, dtype=np.int64)
            cum[0] = 0
            np.cumsum(self.freqs, out=cum[1:])
            self._cum = cum
        return self._cum

    def span(self, symbol: int) -> tuple[int, int]:
        """(cumulative_low, frequency) of ``symbol`` as plain ints."""
        cum = self.cumulative()
        lo = int(cum[symbol])
        return lo, int(cum[symbol + 1]) - lo

    def __eq__(self, other):
        if not isinstance(other, QuantizedDistribution):
            return NotImplemented
        return np.array_equal(self.freqs, other.freqs)

    def __repr__(self):
        return f"QuantizedDistribution(S={self.alphabet_size})"


@njit(cache=True)
def _quantize_into(w, f, cum, comp, scratch):  # pragma: no cover - compiled
    """Shared kernel: weights -> frequencies plus cumulative table."""
    S = w.shape[0]
    C = TOTAL - S
    W = np.int64(0)
    for i in range(S):
        W += w[i]
    got = np.int64(0)
    for i in range(S):
        p = w[i] * C
        q = p // W
        f[i] = q + 1
        got += q + 1
        # Unique composite key: descending order = largest remainder first,
        # remainder ties resolved toward the lowest symbol index.
        comp[i] = (p - q * W) * S + (S - 1 - i)
    R = TOTAL - got
    if R > 0:
        for i in range(S):
            scratch[i] = comp[i]
        kth = np.partition(scratch, S - R)[S - R]
        n = 0
        for i in range(S):
            if comp[i] > kth:
                f[i] += 1
                n += 1
        if n < R:
            for i in range(S):
                if comp[i] == kth:
                    f[i] += 1
                    n += 1
                    if n == R:
                        break
    c = np.int64(0)
    cum[0] = 0
    for i in range(S):
        c += f[i]
        cum[i + 1] = c


def _quantize_exact(weights: Sequence[int], S: int) -> np.ndarray:
    # Arbitrary-precision path; bit-identical to the compiled kernel.
    C = TOTAL - S
    W = 0
    for x in weights:
        W += int(x)
    f = [0] * S
    rem = [0] * S
    got = 0
    for i in range(S):
        p = int(weights[i]) * C
        q = p // W
        f[i] = q + 1
        rem[i] = p - q * W
        got += q + 1
    R = TOTAL - got
    if R > 0:
        for i in sorted(range(S), key=lambda i: (-rem[i], i))[:R]:
            f[i] += 1
    return np.array(f, dtype=np.int64)


def _run_kernel(arr: np.ndarray, S: int) -> QuantizedDistribution:
    f = np.empty(S, dtype=np.int64)
    cum = np.empty(S + 1, dtype=np.int64)
    comp = np.empty(S, dtype=np.int64)
    scratch = np.empty(S, dtype=np.int64)
    _quantize_into(arr, f, cum, comp, scratch)
    dist = QuantizedDistribution._trusted(f)
    dist._cum = cum
    return dist


# The compiled kernel works in int64; stay well clear of overflow in the
# products w*(TOTAL-S) and in the composite keys rem*S.
_I64_SAFE = (1 << 62)


def quantize_distribution(weights, S: int) -> QuantizedDistribution:
    """Deterministically round non-negative integer weights to frequencies.

    With ``W = sum(weights)`` and ``C = TOTAL - S``, the provisional
    frequency of symbol i is ``floor(w_i * C / W) + 1``; the remaining
    ``TOTAL - sum`` counts go to the symbols with the largest remainders of
    ``w_i * C / W``, ties broken toward the lowest index.  The result always
    satisfies the :class:`QuantizedDistribution` invariants and is monotone:
    ``w_i >= w_j`` implies ``f_i >= f_j``.
    """
    if S < 2 or S > MAX_ALPHABET:
        raise DistributionError(f"alphabet size must be in [2, {MAX_ALPHABET}], got {S}")
    if isinstance(weights, np.ndarray):
        if weights.ndim != 1 or weights.shape[0] != S:
            raise DistributionError(f"expected {S} weights, got shape {weights.shape}")
        if not np.issubdtype(weights.dtype, np.integer):
            raise DistributionError("weights must be integers")
        if weights.min() < 0:
            raise DistributionError("weights must be non-negative")
        wmax = int(weights.max())
        if wmax == 0:
            raise DistributionError("all-zero weight vector cannot be quantized")
        # S*wmax*TOTAL bounds every kernel intermediate: the products w*C,
        # the int64 weight sum, and the composite keys rem*S (rem < W <= S*wmax).
        if _HAVE_NUMBA and S * wmax * TOTAL < _I64_SAFE:
            arr = np.ascontiguousarray(weights, dtype=np.int64)
            return _run_kernel(arr, S)
        return QuantizedDistribution._trusted(_quantize_exact(weights.tolist(), S))
    wl = [int(x) for x in weights]
    if len(wl) != S:
        raise DistributionError(f"expected {S} weights, got {len(wl)}")
    if any(x < 0 for x in wl):
        raise DistributionError("weights must be non-negative")
    if not any(wl):
        raise DistributionError("all-zero weight vector cannot be quantized")
    wmax = max(wl)
    if _HAVE_NUMBA and S * wmax * TOTAL < _I64_SAFE:
        return _run_kernel(np.array(wl, dtype=np.int64), S)
    return QuantizedDistribution._trusted(_quantize_exact(wl, S))


_UNIFORM_CACHE: dict[int, QuantizedDistribution] = {}


def uniform_distribution(S: int) -> QuantizedDistribution:
    """The quantization of equal weights; cached per alphabet size."""
    dist = _UNIFORM_CACHE.get(S)
    if dist is None:
        dist = quantize_distribution([1] * S, S)
        _UNIFORM_CACHE[S] = dist
    return dist
