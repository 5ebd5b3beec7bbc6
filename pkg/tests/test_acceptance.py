"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the whole module is also part of the default suite.
"""

import json
import random
import socket
import struct
import time
from pathlib import Path

import numpy as np

import mediagen
import textgen
from lmz.archive import read_archive
from lmz.bench import run_bench
from lmz.coder import encode_stream, ideal_code_length
from lmz.distribution import quantize_distribution
from lmz.errors import LmzError
from lmz.fixture_server import builtin_backend
from lmz.pipeline import compress_bytes, decompress_bytes
from lmz.predictors import PredictorSpec
from lmz.protocol import (
    ERR_MALFORMED,
    ERR_PROTOCOL,
    ERR_VERSION,
    OP_BEGIN_CHUNK,
    OP_BYE,
    OP_DIST,
    OP_END_CHUNK,
    OP_ERR,
    OP_HELLO,
    OP_OBSERVE,
    OP_PREDICT,
    OP_READY,
    PROTOCOL_VERSION,
    PredictorServer,
    connect,
    pack_hello,
    read_frame,
    unpack_err,
    validate_dist,
    write_frame,
)

SPECS = {
    "uniform": PredictorSpec("uniform"),
    "order0": PredictorSpec("order0"),
    "orderK:k=2": PredictorSpec("orderK", order=2),
}

MIB = 1 << 20


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")


# ---------------------------------------------------------------------------


def _random_media_files(per_media: int):
    rng = random.Random(20240612)
    files = []
    for i in range(per_media):
        files.append(("text", textgen.generate(rng.randrange(0, 4000), seed=i)))
    for i in range(per_media):
        w, h = rng.randrange(1, 48), rng.randrange(1, 48)
        if i % 2:
            files.append(("image", mediagen.make_ppm(w, h, rng, comment=i % 4 == 1)))
        else:
            files.append(("image", mediagen.make_pgm(w, h, rng, comment=i % 4 == 2)))
    for i in range(per_media):
        files.append(
            (
                "audio",
                mediagen.make_wav(
                    rng.randrange(1, 900),
                    rng,
                    channels=rng.choice([1, 2]),
                    sample_rate=rng.choice([8000, 16000, 44100]),
                    extra_chunk=i % 3 == 0,
                    trailing_chunk=i % 5 == 0,
                ),
            )
        )
    for i in range(per_media):
        w = rng.choice([2, 4, 8, 16, 32])
        h = rng.choice([2, 4, 8, 16])
        files.append(
            (
                "video",
                mediagen.make_y4m(
                    w, h, rng.randrange(1, 4), rng,
                    colorspace=rng.choice(["420", "444"]),
                    frame_params=i % 4 == 0,
                ),
            )
        )
    return files


def test_losslessness_all_media_all_predictors():
    """>=100 randomized files per media type x every built-in predictor."""
    files = _random_media_files(per_media=100)
    start = time.monotonic()
    checked = 0
    for label, spec in SPECS.items():
        for media, data in files:
            arc = compress_bytes(data, spec)
            assert decompress_bytes(arc) == data, (label, media, len(data))
            checked += 1
    elapsed = time.monotonic() - start
    ok = checked == 400 * len(SPECS) and elapsed < 600
    report(
        "losslessness",
        ok,
        f"{checked} round trips across 4 media types in {elapsed:.0f}s (budget 600s)",
    )
    assert ok


def test_coder_efficiency_static_distribution():
    """1 MiB i.i.d. symbols, matching static table: size <= ideal + 0.1% + 64 B."""
    weights = [(i % 37) ** 2 + 1 for i in range(256)]
    dist = quantize_distribution(weights, 256)
    p = np.asarray(dist.freqs, dtype=np.float64) / float(dist.freqs.sum())
    rng = np.random.default_rng(99)
    syms = rng.choice(256, size=MIB, p=p).tolist()
    ideal = ideal_code_length(syms, (dist for _ in range(MIB)))
    code = encode_stream(syms, (dist for _ in range(MIB)))
    bound = ideal * 1.001 + 64 * 8
    ok = len(code) * 8 <= bound
    report(
        "coder-efficiency",
        ok,
        f"encoded {len(code) * 8} bits vs ideal {ideal:.0f} (+{len(code) * 8 - ideal:.0f}), bound {bound:.0f}",
    )
    assert ok


def test_uniform_source_incompressibility():
    """1 MiB uniform random bytes: ratio within [0.98, 1.01] for every predictor.

    Known spec defect at the default 2048-byte chunking: the add-one order0
    model's per-chunk learning cost is 0.124 bits/symbol, which lands its
    ratio at ~0.977 no matter the implementation; it passes at
    --chunk-size 4096 and above.  The criterion is asserted as stated.
    """
    data = random.Random(31337).randbytes(MIB)
    results = {}
    for label, spec in SPECS.items():
        arc = compress_bytes(data, spec)
        results[label] = len(data) / len(arc)
    lines = ", ".join(f"{k}={v:.4f}" for k, v in results.items())
    ok = all(0.98 <= v <= 1.01 for v in results.values())
    report("uniform-incompressibility", ok, lines)
    assert ok, lines


def test_predictor_ordering_on_text(tmp_path):
    """orderK > order0 > uniform on >=1 MiB of prose, each by >=1%."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "prose.txt").write_bytes(textgen.generate(MIB, seed=77))
    specs = [s.to_string() for s in SPECS.values()]
    rep = run_bench([str(corpus / "prose.txt")], specs)
    assert all(r.ok for r in rep.rows), [r.error for r in rep.rows if not r.ok]
    ratio = {a.predictor: a.ratio for a in rep.aggregates}
    ru = ratio["uniform:S=256:v1"]
    r0 = ratio["order0:S=256:v1"]
    rk = ratio["orderK:k=2:S=256:v1"]
    ok = rk >= r0 * 1.01 and r0 >= ru * 1.01
    report(
        "predictor-ordering",
        ok,
        f"uniform={ru:.3f} order0={r0:.3f} orderK={rk:.3f} (margins {r0 / ru - 1:+.1%}, {rk / r0 - 1:+.1%})",
    )
    assert ok


def test_audio_transform_invariants():
    """Side channel exactly ceil(n/8) bytes, main bytes <= 0x7F, WAV round-trips."""
    from lmz.media import audio_to_sequence

    rng = random.Random(4242)
    checked = 0
    for _ in range(40):
        data = mediagen.make_wav(
            rng.randrange(1, 1200), rng,
            channels=rng.choice([1, 2]),
            extra_chunk=rng.random() < 0.4,
            trailing_chunk=rng.random() < 0.3,
        )
        p = audio_to_sequence(data)
        n = len(p.main_bytes)
        assert len(p.side_bits) == (n + 7) // 8
        assert max(p.main_bytes, default=0) <= 0x7F
        arc = compress_bytes(data, SPECS["order0"])
        assert decompress_bytes(arc) == data
        checked += 1
    report("audio-transform", True, f"{checked} WAV files, side bits and shift verified")


def test_determinism_and_corruption_detection():
    """Byte-identical re-compression; >=999/1000 single-byte flips rejected."""
    data = textgen.generate(40_000, seed=9)
    spec = SPECS["orderK:k=2"]
    a = compress_bytes(data, spec)
    b = compress_bytes(data, spec)
    deterministic = a == b

    rng = random.Random(555)
    detected = 0
    trials = 1000
    for _ in range(trials):
        bad = bytearray(a)
        pos = rng.randrange(len(bad))
        bad[pos] ^= rng.randrange(1, 256)
        try:
            out = decompress_bytes(bytes(bad))
            if out != data:
                detected += 1
        except LmzError:
            detected += 1
    ok = deterministic and detected >= 999
    report(
        "determinism-and-crc",
        ok,
        f"re-compression identical: {deterministic}; flips detected {detected}/{trials}",
    )
    assert ok


def test_quantization_shared_vectors():
    """All 1000 shared test vectors reproduce bit-exactly."""
    path = Path(__file__).resolve().parents[1] / "testdata" / "quantize_vectors.jsonl"
    n = 0
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        got = quantize_distribution(rec["weights"], rec["s"])
        assert [int(f) for f in got.freqs] == rec["freqs"], f"vector {n} diverged"
        n += 1
    ok = n == 1000
    report("quantization-vectors", ok, f"{n}/1000 vectors bit-exact")
    assert ok


def test_protocol_conformance_and_loopback():
    """Every opcode exercised; illegal transitions yield ERR; loopback uniform
    output equals the built-in uniform coder output byte-for-byte."""
    backend = builtin_backend(PredictorSpec("uniform"))
    hello = (OP_HELLO, pack_hello(PROTOCOL_VERSION, 256, ""))
    illegal = [
        ([(OP_PREDICT, b"")], ERR_PROTOCOL),
        ([(OP_HELLO, pack_hello(PROTOCOL_VERSION + 3, 256, ""))], ERR_VERSION),
        ([(0x55, b"")], ERR_MALFORMED),
        ([hello, (OP_OBSERVE, struct.pack("<I", 1))], ERR_PROTOCOL),
        ([hello, (OP_END_CHUNK, b"")], ERR_PROTOCOL),
        ([hello, hello], ERR_PROTOCOL),
        ([hello, (OP_BEGIN_CHUNK, b""), (OP_BEGIN_CHUNK, b"")], ERR_PROTOCOL),
        ([hello, (OP_BEGIN_CHUNK, b""), (OP_OBSERVE, struct.pack("<I", 1))], ERR_PROTOCOL),
        ([hello, (OP_BEGIN_CHUNK, b""), (OP_PREDICT, b""), (OP_PREDICT, b"")], ERR_PROTOCOL),
        ([hello, (OP_BEGIN_CHUNK, b""), (OP_PREDICT, b""), (OP_OBSERVE, b"xx")], ERR_MALFORMED),
    ]
    with PredictorServer(backend) as server:
        endpoint = f"{server.address[0]}:{server.address[1]}"
        host, port = server.address

        # full legal walk covering HELLO READY BEGIN PREDICT DIST OBSERVE END BYE
        sock = socket.create_connection((host, port), timeout=10)
        r, w = sock.makefile("rb"), sock.makefile("wb")
        write_frame(w, *hello)
        opcode, _ = read_frame(r)
        assert opcode == OP_READY
        write_frame(w, OP_BEGIN_CHUNK)
        write_frame(w, OP_PREDICT)
        opcode, payload = read_frame(r)
        assert opcode == OP_DIST and validate_dist(payload, 256)
        write_frame(w, OP_OBSERVE, struct.pack("<I", 7))
        write_frame(w, OP_END_CHUNK)
        write_frame(w, OP_BYE)
        assert read_frame(r) is None
        sock.close()

        # illegal transitions always end in ERR with the right class of code
        bad = 0
        for frames, expect in illegal:
            sock = socket.create_connection((host, port), timeout=10)
            r, w = sock.makefile("rb"), sock.makefile("wb")
            for op, payload in frames:
                try:
                    write_frame(w, op, payload)
                except (BrokenPipeError, ConnectionResetError):
                    break
            received = []
            while True:
                try:
                    frame = read_frame(r)
                except LmzError:
                    break
                if frame is None:
                    break
                received.append(frame)
            sock.close()
            if received and received[-1][0] == OP_ERR and unpack_err(received[-1][1])[0] == expect:
                bad += 1
        illegal_ok = bad == len(illegal)

        # loopback equality with the built-in uniform path
        data = textgen.generate(65536, seed=4)
        with connect(endpoint) as client:
            arc_ext = compress_bytes(data, connection=client)
        arc_builtin = compress_bytes(data, SPECS["uniform"])
        pa, pb = read_archive(arc_ext), read_archive(arc_builtin)
        loopback_ok = pa.chunk_blobs == pb.chunk_blobs and pa.chunk_table == pb.chunk_table
        with connect(endpoint) as client:
            lossless = decompress_bytes(arc_ext, connection=client) == data

    ok = illegal_ok and loopback_ok and lossless
    report(
        "protocol-conformance",
        ok,
        f"illegal transitions {bad}/{len(illegal)} ERR'd; loopback chunks identical: {loopback_ok}",
    )
    assert ok
