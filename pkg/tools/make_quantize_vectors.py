#!/usr/bin/env python3
"""Regenerate testdata/quantize_vectors.jsonl.

1000 deterministic weight vectors spanning the quantizer's input space
(byte-alphabet counts, skewed and spiky vectors, tiny alphabets, magnitudes
beyond int64) paired with the frequency tables the reference quantizer
produces.  Both the main package and the model server must reproduce every
line bit-exactly; regenerating this file is an interface change.
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lmz.distribution import quantize_distribution  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "testdata" / "quantize_vectors.jsonl"


def gen_weights(rng: random.Random, case: int) -> tuple[int, list[int]]:
    kind = case % 10
    if kind < 4:  # byte alphabet, count-like weights
        s = 256
        w = [rng.randrange(0, rng.choice([4, 50, 3000])) for _ in range(s)]
    elif kind < 5:  # byte alphabet, zipf-ish spikes
        s = 256
        w = [rng.randrange(0, 10) for _ in range(s)]
        for _ in range(rng.randrange(1, 6)):
            w[rng.randrange(s)] = rng.randrange(10**3, 10**7)
    elif kind < 6:  # tiny alphabets
        s = rng.choice([2, 3, 4, 5, 8])
        w = [rng.randrange(0, 100) for _ in range(s)]
    elif kind < 7:  # mid alphabets
        s = rng.randrange(9, 200)
        w = [rng.randrange(0, 10**6) for _ in range(s)]
    elif kind < 8:  # single survivor and near-degenerate vectors
        s = rng.choice([2, 3, 256])
        w = [0] * s
        w[rng.randrange(s)] = rng.choice([1, 7, 10**9])
    elif kind < 9:  # beyond int64: exercises the exact path
        s = rng.choice([2, 16, 256])
        w = [rng.randrange(0, 2**70) for _ in range(s)]
    else:  # equal and almost-equal plateaus (remainder tie-breaking)
        s = rng.choice([3, 7, 256, 1000])
        base = rng.randrange(1, 50)
        w = [base + (rng.randrange(2) if rng.random() < 0.3 else 0) for _ in range(s)]
    if not any(w):
        w[0] = 1
    return s, w


def main() -> None:
    rng = random.Random(20240611)
    lines = []
    for case in range(1000):
        s, w = gen_weights(rng, case)
        freqs = [int(f) for f in quantize_distribution(w, s).freqs]
        lines.append(json.dumps({"s": s, "weights": w, "freqs": freqs}))
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} vectors to {OUT}")


if __name__ == "__main__":
    main()
