"""Framed request/response protocol for external predictor services.

Frame layout: ``u32 LE payload length | u8 opcode | payload``.  Integers are
little-endian throughout; frequencies cross the wire as integers, never
floats, so encoder and decoder see bit-identical distributions regardless of
platform (the server quantizes, the client only validates).

Session flow::

    client                          server
    HELLO(version, S, model)  ->
                              <-    READY(version_tag)        [or ERR + close]
    BEGIN_CHUNK               ->
    PREDICT                   ->
                              <-    DIST(S x u32 frequencies)
    OBSERVE(symbol)           ->
    ... strict PREDICT/DIST/OBSERVE alternation ...
    END_CHUNK                 ->
    ... more chunks ...
    BYE                       ->    (connection closes)

Any protocol violation is answered with ERR(code, message) and the
connection is closed; the state machine never attempts to resynchronize.
See docs/PROTOCOL.md for byte-level examples.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading
from typing import Callable

import numpy as np

from .distribution import TOTAL, QuantizedDistribution
from .errors import HandshakeError, TransportError, WireProtocolError
from .predictors import KIND_EXTERNAL, PredictorSession, PredictorSpec

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

OP_NAMES = {
    OP_HELLO: "HELLO",
    OP_READY: "READY",
    OP_BEGIN_CHUNK: "BEGIN_CHUNK",
    OP_PREDICT: "PREDICT",
    OP_DIST: "DIST",
    OP_OBSERVE: "OBSERVE",
    OP_END_CHUNK: "END_CHUNK",
    OP_BYE: "BYE",
    OP_ERR: "ERR",
}

ERR_VERSION = 1
ERR_PROTOCOL = 2
ERR_MALFORMED = 3
ERR_INTERNAL = 4

_MAX_PAYLOAD = 1 << 20  # DIST for S=65536 is 256 KiB; anything near 1 MiB is garbage
DEFAULT_TIMEOUT = 30.0


# ---------------------------------------------------------------------------
# Framing


def write_frame(stream, opcode: int, payload: bytes = b"") -> None:
    stream.write(struct.pack("<IB", len(payload), opcode) + payload)
    stream.flush()


def read_frame(stream) -> tuple[int, bytes] | None:
    """Read one frame; None on clean EOF at a frame boundary."""
    try:
        header = stream.read(5)
    except socket.timeout:
        raise TransportError("timed out waiting for a frame") from None
    if not header:
        return None
    if len(header) < 5:
        raise WireProtocolError("truncated frame header")
    length, opcode = struct.unpack("<IB", header)
    if length > _MAX_PAYLOAD:
        raise WireProtocolError(f"frame payload of {length} bytes exceeds the limit")
    payload = b""
    while len(payload) < length:
        try:
            piece = stream.read(length - len(payload))
        except socket.timeout:
            raise TransportError("timed out mid-frame") from None
        if not piece:
            raise WireProtocolError("connection closed mid-frame")
        payload += piece
    return opcode, payload


def pack_hello(version: int, alphabet_size: int, model: str) -> bytes:
    m = model.encode("utf-8")
    return struct.pack("<HIH", version, alphabet_size, len(m)) + m


def unpack_hello(payload: bytes) -> tuple[int, int, str]:
    if len(payload) < 8:
        raise WireProtocolError("short HELLO payload", code=ERR_MALFORMED)
    version, alphabet, mlen = struct.unpack_from("<HIH", payload, 0)
    if len(payload) != 8 + mlen:
        raise WireProtocolError("HELLO length mismatch", code=ERR_MALFORMED)
    return version, alphabet, payload[8:].decode("utf-8", "replace")


def pack_ready(version_tag: str) -> bytes:
    t = version_tag.encode("utf-8")
    return struct.pack("<H", len(t)) + t


def unpack_ready(payload: bytes) -> str:
    if len(payload) < 2:
        raise WireProtocolError("short READY payload")
    (n,) = struct.unpack_from("<H", payload, 0)
    if len(payload) != 2 + n:
        raise WireProtocolError("READY length mismatch")
    return payload[2:].decode("utf-8")


def pack_err(code: int, message: str) -> bytes:
    return struct.pack("<H", code) + message.encode("utf-8")


def unpack_err(payload: bytes) -> tuple[int, str]:
    if len(payload) < 2:
        return ERR_INTERNAL, "malformed ERR frame"
    (code,) = struct.unpack_from("<H", payload, 0)
    return code, payload[2:].decode("utf-8", "replace")


def pack_dist(dist: QuantizedDistribution) -> bytes:
    return dist.freqs.astype("<u4").tobytes()


def validate_dist(payload: bytes, alphabet_size: int) -> QuantizedDistribution:
    """Parse a DIST payload, rejecting anything the coder could not use.

    The client never repairs a bad table: the server is the single source of
    truth for quantization, otherwise compress and decompress could diverge.
    """
    if len(payload) != 4 * alphabet_size:
        raise WireProtocolError(
            f"DIST payload is {len(payload)} bytes, expected {4 * alphabet_size}"
        )
    freqs = np.frombuffer(payload, dtype="<u4").astype(np.int64)
    if int(freqs.min()) < 1:
        raise WireProtocolError("DIST invariant violated: zero frequency")
    total = int(freqs.sum())
    if total != TOTAL:
        raise WireProtocolError(f"DIST invariant violated: sum {total} != {TOTAL}")
    return QuantizedDistribution._trusted(freqs)


# ---------------------------------------------------------------------------
# Client


class ExternalSession(PredictorSession):
    """One chunk's predictor context on an open connection."""

    def __init__(self, client: "PredictorClient"):
        super().__init__(client.spec)
        self._client = client
        self._open = True

    def _predict(self) -> QuantizedDistribution:
        c = self._client
        write_frame(c._w, OP_PREDICT)
        frame = read_frame(c._r)
        if frame is None:
            raise TransportError("connection closed while waiting for DIST")
        opcode, payload = frame
        if opcode == OP_ERR:
            code, msg = unpack_err(payload)
            raise WireProtocolError(f"server error: {msg}", code=code)
        if opcode != OP_DIST:
            raise WireProtocolError(
                f"expected DIST, got {OP_NAMES.get(opcode, hex(opcode))}"
            )
        return validate_dist(payload, self.spec.alphabet_size)

    def _observe(self, symbol: int) -> None:
        write_frame(self._client._w, OP_OBSERVE, struct.pack("<I", symbol))

    def end(self) -> None:
        if self._open:
            self._open = False
            try:
                write_frame(self._client._w, OP_END_CHUNK)
            except (OSError, ValueError):
                pass  # connection already dead; do not mask the real error
            self._client._session = None


class PredictorClient:
    """Handshaken connection to a predictor service."""

    def __init__(self, r, w, alphabet_size: int, model: str, sock=None):
        self._r = r
        self._w = w
        self._sock = sock
        self._session: ExternalSession | None = None
        self._closed = False
        write_frame(w, OP_HELLO, pack_hello(PROTOCOL_VERSION, alphabet_size, model))
        frame = read_frame(r)
        if frame is None:
            raise HandshakeError("connection closed during handshake")
        opcode, payload = frame
        if opcode == OP_ERR:
            code, msg = unpack_err(payload)
            raise HandshakeError(f"handshake rejected: {msg}", code=code)
        if opcode != OP_READY:
            raise HandshakeError(f"expected READY, got {OP_NAMES.get(opcode, hex(opcode))}")
        self.version_tag = unpack_ready(payload)
        self.spec = PredictorSpec(
            kind=KIND_EXTERNAL, alphabet_size=alphabet_size, version_tag=self.version_tag
        )

    def begin_session(self) -> ExternalSession:
        if self._session is not None:
            raise WireProtocolError("previous chunk session is still open")
        write_frame(self._w, OP_BEGIN_CHUNK)
        self._session = ExternalSession(self)
        return self._session

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            write_frame(self._w, OP_BYE)
        except (OSError, ValueError):
            pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(
    endpoint: str | tuple[str, int],
    alphabet_size: int = 256,
    model: str = "",
    timeout: float = DEFAULT_TIMEOUT,
) -> PredictorClient:
    """Open a TCP connection to ``host:port`` and perform the handshake."""
    if isinstance(endpoint, str):
        host, _, port_s = endpoint.rpartition(":")
        if not host or not port_s.isdigit():
            raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
        endpoint = (host, int(port_s))
    try:
        sock = socket.create_connection(endpoint, timeout=timeout)
    except OSError as exc:
        raise TransportError(f"cannot reach predictor service at {endpoint}: {exc}") from exc
    # one symbol per message: Nagle would serialize the session at ~25 msg/s
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    r = sock.makefile("rb")
    w = sock.makefile("wb")
    return PredictorClient(r, w, alphabet_size, model, sock=sock)


def client_from_streams(r, w, alphabet_size: int = 256, model: str = "") -> PredictorClient:
    """Handshake over an existing binary stream pair (stdio transport)."""
    return PredictorClient(r, w, alphabet_size, model)


# ---------------------------------------------------------------------------
# Server

# A backend answers HELLO: (alphabet_size, model_request) -> (version_tag,
# zero-arg factory producing one fresh PredictorSession per chunk).
Backend = Callable[[int, str], tuple[str, Callable[[], PredictorSession]]]

_AWAIT_HELLO = 0
_IDLE = 1
_CHUNK_READY = 2
_AWAIT_OBSERVE = 3


def serve_connection(r, w, backend: Backend) -> None:
    """Run the server-side state machine over one connection until it ends."""

    def bail(code: int, message: str) -> None:
        try:
            write_frame(w, OP_ERR, pack_err(code, message))
        except (OSError, ValueError):
            pass

    state = _AWAIT_HELLO
    factory = None
    session = None
    while True:
        try:
            frame = read_frame(r)
        except WireProtocolError as exc:
            bail(ERR_MALFORMED, str(exc))
            return
        if frame is None:
            return  # peer vanished; nothing sensible left to say
        opcode, payload = frame
        name = OP_NAMES.get(opcode)
        if name is None:
            bail(ERR_MALFORMED, f"unknown opcode {opcode:#x}")
            return

        if state == _AWAIT_HELLO:
            if opcode != OP_HELLO:
                bail(ERR_PROTOCOL, f"expected HELLO, got {name}")
                return
            try:
                version, alphabet, model = unpack_hello(payload)
            except WireProtocolError as exc:
                bail(ERR_MALFORMED, str(exc))
                return
            if version != PROTOCOL_VERSION:
                bail(ERR_VERSION, f"protocol version {version} unsupported, server speaks {PROTOCOL_VERSION}")
                return
            try:
                version_tag, factory = backend(alphabet, model)
            except Exception as exc:
                bail(ERR_INTERNAL, f"backend rejected HELLO: {exc}")
                return
            write_frame(w, OP_READY, pack_ready(version_tag))
            state = _IDLE

        elif opcode == OP_BYE:
            return

        elif state == _IDLE:
            if opcode != OP_BEGIN_CHUNK:
                bail(ERR_PROTOCOL, f"{name} outside a chunk")
                return
            session = factory()
            state = _CHUNK_READY

        elif state == _CHUNK_READY:
            if opcode == OP_PREDICT:
                try:
                    dist = session.predict()
                except Exception as exc:
                    bail(ERR_INTERNAL, f"predictor failure: {exc}")
                    return
                write_frame(w, OP_DIST, pack_dist(dist))
                state = _AWAIT_OBSERVE
            elif opcode == OP_END_CHUNK:
                session.end()
                session = None
                state = _IDLE
            else:
                bail(ERR_PROTOCOL, f"{name} while awaiting PREDICT or END_CHUNK")
                return

        elif state == _AWAIT_OBSERVE:
            if opcode != OP_OBSERVE:
                bail(ERR_PROTOCOL, f"{name} while awaiting OBSERVE")
                return
            if len(payload) != 4:
                bail(ERR_MALFORMED, "OBSERVE payload must be 4 bytes")
                return
            (symbol,) = struct.unpack("<I", payload)
            if symbol >= session.spec.alphabet_size:
                bail(ERR_PROTOCOL, f"symbol {symbol} outside the alphabet")
                return
            session.observe(symbol)
            state = _CHUNK_READY


class PredictorServer:
    """Threaded TCP server speaking the predictor protocol."""

    def __init__(self, backend: Backend, host: str = "127.0.0.1", port: int = 0):
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                r = self.request.makefile("rb")
                w = self.request.makefile("wb")
                try:
                    serve_connection(r, w, outer.backend)
                except (OSError, ValueError):
                    pass

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self.backend = backend
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
