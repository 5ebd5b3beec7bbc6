"""Reference predictor service backed by the built-in predictors.

Used by the conformance tests as a loopback peer, and runnable standalone
for protocol experiments::

    python -m lmz.fixture_server --predictor uniform --port 9000
    python -m lmz.fixture_server --predictor orderK:k=2:S=256:v1 --stdio

The HELLO model-request string may name a built-in predictor (either a bare
kind like ``order0`` or a full spec string); an empty request uses the
server's default.  The READY version tag is the spec string with ``:``
replaced by ``-`` so it stays a single token inside archive headers.
"""

from __future__ import annotations

import argparse
import sys

from .predictors import PredictorSpec, begin_session, resolve_builtin
from .protocol import PredictorServer, serve_connection


def _parse_spec(text: str, alphabet_size: int = 256) -> PredictorSpec:
    """A full spec string, or a bare kind (orderK defaults to k=2)."""
    if ":" in text:
        return resolve_builtin(text)
    if text == "orderK":
        return PredictorSpec("orderK", alphabet_size=alphabet_size, order=2)
    return PredictorSpec(text, alphabet_size=alphabet_size)


def builtin_backend(default_spec: PredictorSpec):
    """Backend resolving HELLO requests to built-in predictor sessions."""

    def backend(alphabet_size: int, model: str):
        spec = default_spec if not model else _parse_spec(model, alphabet_size)
        if spec.alphabet_size != alphabet_size:
            raise ValueError(
                f"alphabet {alphabet_size} does not match predictor {spec.to_string()}"
            )
        tag = spec.to_string().replace(":", "-")
        return tag, lambda: begin_session(spec)

    return backend


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="built-in predictor protocol server")
    parser.add_argument("--predictor", default="uniform", help="default predictor (kind or spec string)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--stdio", action="store_true", help="serve one session over stdin/stdout")
    args = parser.parse_args(argv)

    backend = builtin_backend(_parse_spec(args.predictor))
    if args.stdio:
        serve_connection(sys.stdin.buffer, sys.stdout.buffer, backend)
        return 0
    server = PredictorServer(backend, host=args.host, port=args.port)
    print(f"listening on {server.address[0]}:{server.address[1]}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
