"""Corpus benchmark harness: compress, self-verify, report ratios.

Every file is compressed with every requested predictor, decompressed again,
and byte-compared; a benchmark row is only marked ok if the round trip was
lossless.  Per-file failures are recorded and the run continues.

The machine-readable report is line-delimited JSON.  ``record == "file"``
rows carry: path, media, predictor, original_bytes, compressed_bytes, ratio
(original/compressed, null for empty files), bits_per_symbol, seconds, ok,
error.  ``record == "aggregate"`` rows carry per-predictor totals with the
ratio computed on summed sizes, never averaged ratios.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .archive import read_archive
from .errors import LmzError
from .media import detect_media
from .pipeline import compress_bytes, decompress_bytes
from .predictors import PredictorSpec


@dataclass
class FileResult:
    path: str
    media: str
    predictor: str
    original_bytes: int
    compressed_bytes: int
    ratio: float | None
    bits_per_symbol: float | None
    seconds: float
    ok: bool
    error: str = ""


@dataclass
class Aggregate:
    predictor: str
    files: int
    original_bytes: int
    compressed_bytes: int
    ratio: float | None


@dataclass
class BenchReport:
    rows: list[FileResult]
    aggregates: list[Aggregate]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"record": "file", **asdict(r)}, sort_keys=True) for r in self.rows]
        lines += [
            json.dumps({"record": "aggregate", **asdict(a)}, sort_keys=True)
            for a in self.aggregates
        ]
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        header = f"{'path':<32} {'media':<6} {'predictor':<22} {'original':>10} {'compressed':>10} {'ratio':>7} {'bits/sym':>8} {'sec':>7}"
        out = [header, "-" * len(header)]
        for r in self.rows:
            ratio = f"{r.ratio:.3f}" if r.ratio is not None else "n/a"
            bps = f"{r.bits_per_symbol:.3f}" if r.bits_per_symbol is not None else "n/a"
            status = "" if r.ok else f"  ERROR: {r.error}"
            out.append(
                f"{r.path:<32} {r.media:<6} {r.predictor:<22} {r.original_bytes:>10} "
                f"{r.compressed_bytes:>10} {ratio:>7} {bps:>8} {r.seconds:>7.2f}{status}"
            )
        out.append("-" * len(header))
        for a in self.aggregates:
            ratio = f"{a.ratio:.3f}" if a.ratio is not None else "n/a"
            out.append(
                f"{'TOTAL':<32} {'':<6} {a.predictor:<22} {a.original_bytes:>10} "
                f"{a.compressed_bytes:>10} {ratio:>7}"
            )
        return "\n".join(out)


def bench_file(path: str, spec_string: str, chunk_size: int | None = None) -> FileResult:
    """Compress + round-trip verify one file with one built-in predictor."""
    spec = PredictorSpec.from_string(spec_string)
    media = ""
    data = b""
    start = time.perf_counter()
    try:
        data = Path(path).read_bytes()
        media = detect_media(data)
        arc = compress_bytes(data, spec, media=media, chunk_size=chunk_size)
        if decompress_bytes(arc) != data:
            raise LmzError("round-trip mismatch")
    except (LmzError, OSError) as exc:
        return FileResult(
            path, media, spec_string, len(data), 0, None, None,
            time.perf_counter() - start, ok=False, error=str(exc),
        )
    elapsed = time.perf_counter() - start
    n_sym = read_archive(arc).main_len
    return FileResult(
        path=path,
        media=media,
        predictor=spec_string,
        original_bytes=len(data),
        compressed_bytes=len(arc),
        ratio=(len(data) / len(arc)) if data else None,
        bits_per_symbol=(len(arc) * 8 / n_sym) if n_sym else None,
        seconds=elapsed,
        ok=True,
    )


def run_bench(
    paths: list[str],
    spec_strings: list[str],
    chunk_size: int | None = None,
    jobs: int = 1,
) -> BenchReport:
    tasks = [(str(p), s) for p in sorted(paths) for s in spec_strings]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(bench_file, [t[0] for t in tasks], [t[1] for t in tasks],
                                 [chunk_size] * len(tasks)))
    else:
        rows = [bench_file(p, s, chunk_size) for p, s in tasks]
    rows.sort(key=lambda r: (r.path, r.predictor))

    aggregates = []
    for s in spec_strings:
        ok_rows = [r for r in rows if r.predictor == s and r.ok]
        orig = sum(r.original_bytes for r in ok_rows)
        comp = sum(r.compressed_bytes for r in ok_rows)
        aggregates.append(
            Aggregate(s, len(ok_rows), orig, comp, (orig / comp) if comp else None)
        )
    return BenchReport(rows, aggregates)
