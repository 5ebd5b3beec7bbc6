"""Deterministic probability quantization, identical to the compressor's.

Weights are non-negative integers; the result is a frequency vector summing
to exactly 65536 with every entry >= 1.  Provisional frequency of symbol i
is ``floor(w_i * (65536 - S) / sum(w)) + 1``; the remainder goes to the
largest fractional parts, ties toward the lowest index.  The shared file
``testdata/quantize_vectors.jsonl`` pins 1000 input/output pairs that this
implementation and the compressor's must both reproduce bit-exactly.
"""

from __future__ import annotations

import numpy as np

TOTAL = 65536


def quantize_weights(weights, S: int) -> list[int]:
    if len(weights) != S or S < 2:
        raise ValueError(f"need {S} >= 2 weights, got {len(weights)}")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    wmax = max(weights)
    if wmax == 0:
        raise ValueError("all-zero weight vector")
    if S * wmax * TOTAL < (1 << 62):
        w = np.asarray(weights, dtype=np.int64)
        C = TOTAL - S
        prod = w * C
        W = int(w.sum())
        f = prod // W
        rem = prod - f * W
        f += 1
        R = TOTAL - int(f.sum())
        if R > 0:
            # unique composite key: remainder desc, index asc
            comp = rem * S + np.arange(S - 1, -1, -1, dtype=np.int64)
            order = np.argpartition(comp, S - R)[S - R :]
            f[order] += 1
        return [int(x) for x in f]
    # arbitrary-precision path for huge weights
    C = TOTAL - S
    W = sum(int(x) for x in weights)
    f = []
    rem = []
    for x in weights:
        p = int(x) * C
        q = p // W
        f.append(q + 1)
        rem.append(p - q * W)
    R = TOTAL - sum(f)
    for i in sorted(range(S), key=lambda i: (-rem[i], i))[:R]:
        f[i] += 1
    return f


def probs_to_freqs(probs: np.ndarray) -> list[int]:
    """Turn a float probability vector into wire frequencies.

    The float-to-integer step is a plain floor at 2^32 resolution plus one,
    so any two runs producing bit-identical probabilities produce identical
    frequencies.
    """
    scaled = np.floor(probs.astype(np.float64) * (1 << 32)).astype(np.int64) + 1
    return quantize_weights([int(x) for x in scaled], len(scaled))
