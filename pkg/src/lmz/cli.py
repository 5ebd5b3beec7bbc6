"""Command-line interface: compress, decompress, verify, bench, list-predictors."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import run_bench
from .errors import LmzError
from .media import DEFAULT_CHUNK_SIZE
from .pipeline import compress_bytes, decompress_bytes, verify_archive
from .predictors import (
    KIND_EXTERNAL,
    MAX_ORDER,
    PredictorSpec,
    resolve_builtin,
)
from .protocol import connect

DEFAULT_PREDICTOR = "orderK:k=2"


def parse_predictor_flag(text: str) -> PredictorSpec | None:
    """Accepts a kind (``order0``), kind with order (``orderK:k=3``), or a
    full spec string; ``external`` returns None (resolved via --server)."""
    if text == KIND_EXTERNAL:
        return None
    if ":" not in text:
        if text == "orderK":
            return PredictorSpec("orderK", order=2)
        return PredictorSpec(text)
    parts = text.split(":")
    if len(parts) == 2 and parts[0] == "orderK" and parts[1].startswith("k="):
        return PredictorSpec("orderK", order=int(parts[1][2:]))
    return resolve_builtin(text)


def _ratio_text(original: int, compressed: int) -> str:
    if original == 0:
        return "n/a"
    return f"{original / compressed:.3f}"


def _open_connection(args, model: str = ""):
    return connect(args.server, model=model)


def cmd_compress(args) -> int:
    data = Path(args.input).read_bytes()
    media = None if args.media == "auto" else args.media
    out_path = Path(args.output) if args.output else Path(args.input + ".lmz")
    connection = None
    try:
        if args.server:
            model = "" if args.predictor == KIND_EXTERNAL else args.predictor
            connection = _open_connection(args, model=model)
            arc = compress_bytes(data, media=media, chunk_size=args.chunk_size,
                                 connection=connection)
        else:
            spec = parse_predictor_flag(args.predictor)
            if spec is None:
                raise LmzError("--predictor external requires --server")
            arc = compress_bytes(data, spec, media=media, chunk_size=args.chunk_size)
    finally:
        if connection is not None:
            connection.close()
    out_path.write_bytes(arc)
    print(f"{args.input}: {len(data)} -> {len(arc)} bytes, ratio {_ratio_text(len(data), len(arc))}")
    return 0


def cmd_decompress(args) -> int:
    arc = Path(args.archive).read_bytes()
    if args.output:
        out_path = Path(args.output)
    elif args.archive.endswith(".lmz"):
        out_path = Path(args.archive[: -len(".lmz")])
    else:
        out_path = Path(args.archive + ".out")
    connection = _open_connection(args) if args.server else None
    try:
        data = decompress_bytes(arc, connection=connection)
    finally:
        if connection is not None:
            connection.close()
    # Output is written only after the CRC check passed: no partial files.
    out_path.write_bytes(data)
    print(f"{args.archive}: {len(arc)} -> {len(data)} bytes")
    return 0


def cmd_verify(args) -> int:
    arc = Path(args.archive).read_bytes()
    connection = _open_connection(args) if args.server else None
    try:
        info = verify_archive(arc, connection=connection)
    finally:
        if connection is not None:
            connection.close()
    print(
        f"{args.archive}: ok ({info['media']}, {info['predictor']}, "
        f"{info['chunks']} chunks, {info['original_bytes']} bytes original)"
    )
    return 0


def cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    paths = sorted(str(p) for p in corpus.rglob("*") if p.is_file())
    specs = []
    for text in args.predictors.split(","):
        text = text.strip()
        if not text:
            continue
        spec = parse_predictor_flag(text)
        if spec is None:
            print("bench supports built-in predictors only", file=sys.stderr)
            return 1
        specs.append(spec.to_string())
    report = run_bench(paths, specs, chunk_size=args.chunk_size, jobs=args.jobs)
    print(report.format_table())
    if args.report:
        Path(args.report).write_text(report.to_jsonl())
        print(f"report written to {args.report}")
    failures = [r for r in report.rows if not r.ok]
    return 1 if failures else 0


def cmd_list_predictors(args) -> int:
    print("built-in predictors:")
    print("  uniform              flat distribution; observe is a no-op")
    print("  order0               adaptive byte frequencies (add-one smoothing)")
    print(f"  orderK:k=N           interpolated context model, N in [0, {MAX_ORDER}] (default k=2)")
    print("external predictors:")
    print("  --server HOST:PORT   wire-protocol service; --predictor picks the served model")
    print(f"default: {DEFAULT_PREDICTOR}")
    print(f"chunk size defaults per media: {DEFAULT_CHUNK_SIZE}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a file into an .lmz archive")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="archive path (default: INPUT.lmz)")
    p.add_argument("--media", default="auto", choices=["auto", "text", "image", "audio", "video"])
    p.add_argument("--predictor", default=DEFAULT_PREDICTOR)
    p.add_argument("--server", help="external predictor endpoint host:port")
    p.add_argument("--chunk-size", type=int, default=None,
                   help="override the per-media default chunk size")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="restore the original file from an archive")
    p.add_argument("archive")
    p.add_argument("-o", "--output", help="output path (default: strip .lmz)")
    p.add_argument("--server", help="external predictor endpoint host:port")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="decode an archive in memory and check its CRCs")
    p.add_argument("archive")
    p.add_argument("--server", help="external predictor endpoint host:port")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="compress+verify a corpus directory, report ratios")
    p.add_argument("corpus")
    p.add_argument("--predictors", default=f"uniform,order0,{DEFAULT_PREDICTOR}")
    p.add_argument("--report", help="write line-delimited JSON records here")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--chunk-size", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("list-predictors", help="show available predictors and defaults")
    p.set_defaults(func=cmd_list_predictors)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LmzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
