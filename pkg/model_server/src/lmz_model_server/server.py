"""Wire-protocol service: frames, state machine, TCP and stdio transports.

Implements the service side of the compressor's predictor protocol
(docs/PROTOCOL.md in the main package): length-prefixed frames, strict
HELLO/READY handshake, BEGIN_CHUNK starting a fresh model context, and the
PREDICT -> DIST -> OBSERVE alternation.  Any violation draws ERR and a
close.  Frequencies are quantized here, server-side, so every client sees
bit-identical integer tables.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading

from .bundle import ModelBundle
from .model import InferenceSession
from .quantize import probs_to_freqs

PROTOCOL_VERSION = 1

OP_HELLO = 0x01
OP_READY = 0x02
OP_BEGIN_CHUNK = 0x03
OP_PREDICT = 0x04
OP_DIST = 0x05
OP_OBSERVE = 0x06
OP_END_CHUNK = 0x07
OP_BYE = 0x08
OP_ERR = 0x09

ERR_VERSION = 1
ERR_PROTOCOL = 2
ERR_MALFORMED = 3
ERR_INTERNAL = 4

ALPHABET = 256
_MAX_PAYLOAD = 1 << 20


class FrameError(Exception):
    pass


def write_frame(stream, opcode: int, payload: bytes = b"") -> None:
    stream.write(struct.pack("<IB", len(payload), opcode) + payload)
    stream.flush()


def read_frame(stream):
    header = stream.read(5)
    if not header:
        return None
    if len(header) < 5:
        raise FrameError("truncated frame header")
    length, opcode = struct.unpack("<IB", header)
    if length > _MAX_PAYLOAD:
        raise FrameError(f"payload of {length} bytes exceeds the limit")
    payload = b""
    while len(payload) < length:
        piece = stream.read(length - len(payload))
        if not piece:
            raise FrameError("connection closed mid-frame")
        payload += piece
    return opcode, payload


_AWAIT_HELLO, _IDLE, _CHUNK_READY, _AWAIT_OBSERVE = range(4)


def serve_connection(r, w, bundle: ModelBundle) -> None:
    def bail(code: int, message: str) -> None:
        try:
            write_frame(w, OP_ERR, struct.pack("<H", code) + message.encode())
        except (OSError, ValueError):
            pass

    state = _AWAIT_HELLO
    session: InferenceSession | None = None
    while True:
        try:
            frame = read_frame(r)
        except FrameError as exc:
            bail(ERR_MALFORMED, str(exc))
            return
        if frame is None:
            return
        opcode, payload = frame

        if state == _AWAIT_HELLO:
            if opcode != OP_HELLO:
                bail(ERR_PROTOCOL, "expected HELLO")
                return
            if len(payload) < 8:
                bail(ERR_MALFORMED, "short HELLO payload")
                return
            version, alphabet, mlen = struct.unpack_from("<HIH", payload, 0)
            model_request = payload[8 : 8 + mlen].decode("utf-8", "replace")
            if version != PROTOCOL_VERSION:
                bail(ERR_VERSION, f"server speaks protocol {PROTOCOL_VERSION}")
                return
            if alphabet != ALPHABET:
                bail(ERR_INTERNAL, f"this service models {ALPHABET} byte values")
                return
            if model_request not in ("", bundle.version_tag):
                bail(ERR_INTERNAL, f"unknown model {model_request!r}")
                return
            tag = bundle.version_tag.encode()
            write_frame(w, OP_READY, struct.pack("<H", len(tag)) + tag)
            state = _IDLE

        elif opcode == OP_BYE:
            return

        elif state == _IDLE:
            if opcode != OP_BEGIN_CHUNK:
                bail(ERR_PROTOCOL, "only BEGIN_CHUNK or BYE are legal here")
                return
            session = InferenceSession(bundle.model)
            state = _CHUNK_READY

        elif state == _CHUNK_READY:
            if opcode == OP_PREDICT:
                try:
                    freqs = probs_to_freqs(session.next_probs())
                except Exception as exc:  # inference failure is fatal for the link
                    bail(ERR_INTERNAL, f"inference failure: {exc}")
                    return
                write_frame(w, OP_DIST, struct.pack(f"<{ALPHABET}I", *freqs))
                state = _AWAIT_OBSERVE
            elif opcode == OP_END_CHUNK:
                session = None
                state = _IDLE
            else:
                bail(ERR_PROTOCOL, "expected PREDICT or END_CHUNK")
                return

        elif state == _AWAIT_OBSERVE:
            if opcode != OP_OBSERVE:
                bail(ERR_PROTOCOL, "expected OBSERVE")
                return
            if len(payload) != 4:
                bail(ERR_MALFORMED, "OBSERVE payload must be 4 bytes")
                return
            (symbol,) = struct.unpack("<I", payload)
            if symbol >= ALPHABET:
                bail(ERR_PROTOCOL, f"symbol {symbol} outside the alphabet")
                return
            session.push(symbol)
            state = _CHUNK_READY


class ModelServer:
    """Threaded TCP service; sessions are serial within a connection."""

    def __init__(self, bundle: ModelBundle, host: str = "127.0.0.1", port: int = 0):
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                r = self.request.makefile("rb")
                w = self.request.makefile("wb")
                try:
                    serve_connection(r, w, outer.bundle)
                except (OSError, ValueError):
                    pass

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self.bundle = bundle
        self._server = Server((host, port), Handler)
        self.address = self._server.server_address
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.shutdown()


def serve_stdio(bundle: ModelBundle) -> None:
    import sys

    serve_connection(sys.stdin.buffer, sys.stdout.buffer, bundle)
