"""CLI: serve a bundle, train one, or export quantization test vectors."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundle import ModelBundle
from .model import ModelConfig
from .quantize import quantize_weights
from .server import ModelServer, serve_stdio
from .train import CorpusTooSmall, TrainConfig, train


def cmd_serve(args) -> int:
    bundle = ModelBundle.load(args.bundle) if args.bundle else ModelBundle.fresh()
    print(f"model tag {bundle.version_tag}", file=sys.stderr, flush=True)
    if args.stdio:
        serve_stdio(bundle)
        return 0
    server = ModelServer(bundle, host=args.host, port=args.port)
    print(f"listening on {server.address[0]}:{server.address[1]}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_train(args) -> int:
    model_cfg = ModelConfig(
        d_model=args.d_model,
        n_layers=args.layers,
        n_heads=args.heads,
        d_ff=args.d_model * 4,
        window=args.window,
        seed=args.seed,
        threads=args.threads,
    )
    train_cfg = TrainConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        seq_len=args.seq_len,
        lr=args.lr,
    )
    try:
        bundle = train(args.corpus, model_cfg, train_cfg)
    except CorpusTooSmall as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    bundle.save(args.out)
    print(f"saved bundle {bundle.version_tag} to {args.out}")
    return 0


def cmd_export_test_vectors(args) -> int:
    """Run this component's quantizer over the shared vector inputs."""
    out_lines = []
    for line in Path(args.input).read_text().splitlines():
        rec = json.loads(line)
        freqs = quantize_weights(rec["weights"], rec["s"])
        out_lines.append(json.dumps({"s": rec["s"], "weights": rec["weights"], "freqs": freqs}))
    Path(args.output).write_text("\n".join(out_lines) + "\n")
    print(f"wrote {len(out_lines)} vectors to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmz-model-server", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="speak the predictor protocol over TCP or stdio")
    p.add_argument("--bundle", help="bundle directory (default: fresh seeded weights)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--stdio", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("train", help="fit the byte model on a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="bundle output directory")
    p.add_argument("--steps", type=int, default=700)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seq-len", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--d-model", type=int, default=128)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--seed", type=int, default=1337)
    p.add_argument("--threads", type=int, default=2)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "export-test-vectors",
        help="quantize the shared weight vectors for cross-component comparison",
    )
    p.add_argument("--input", required=True, help="shared quantize_vectors.jsonl")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export_test_vectors)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
