import json
import random
import struct
import subprocess
import sys
import zlib

import mediagen
import textgen
from lmz.cli import main, parse_predictor_flag
from lmz.fixture_server import builtin_backend
from lmz.predictors import PredictorSpec
from lmz.protocol import PredictorServer


def test_parse_predictor_flag():
    assert parse_predictor_flag("uniform") == PredictorSpec("uniform")
    assert parse_predictor_flag("order0") == PredictorSpec("order0")
    assert parse_predictor_flag("orderK") == PredictorSpec("orderK", order=2)
    assert parse_predictor_flag("orderK:k=4") == PredictorSpec("orderK", order=4)
    assert parse_predictor_flag("orderK:k=2:S=256:v1") == PredictorSpec("orderK", order=2)
    assert parse_predictor_flag("external") is None


def test_compress_decompress_roundtrip(tmp_path, capsys):
    src = tmp_path / "note.txt"
    src.write_bytes(textgen.generate(6000, seed=4))
    arc = tmp_path / "note.txt.lmz"
    assert main(["compress", str(src)]) == 0
    out = capsys.readouterr().out
    assert "ratio" in out
    assert arc.exists()
    restored = tmp_path / "restored.txt"
    assert main(["decompress", str(arc), "-o", str(restored)]) == 0
    assert restored.read_bytes() == src.read_bytes()


def test_decompress_default_strips_extension(tmp_path):
    src = tmp_path / "a.bin"
    src.write_bytes(b"payload bytes")
    assert main(["compress", str(src), "-o", str(tmp_path / "b.lmz")]) == 0
    src.unlink()
    assert main(["decompress", str(tmp_path / "b.lmz")]) == 0
    assert (tmp_path / "b").read_bytes() == b"payload bytes"


def test_empty_file_ratio_na(tmp_path, capsys):
    src = tmp_path / "empty"
    src.write_bytes(b"")
    assert main(["compress", str(src)]) == 0
    assert "ratio n/a" in capsys.readouterr().out
    assert main(["decompress", str(src) + ".lmz", "-o", str(tmp_path / "back")]) == 0
    assert (tmp_path / "back").read_bytes() == b""


def test_media_autodetect_and_flag(tmp_path, capsys):
    rng = random.Random(0)
    img = tmp_path / "img.pgm"
    img.write_bytes(mediagen.make_pgm(16, 16, rng))
    assert main(["compress", str(img), "--predictor", "order0"]) == 0
    assert main(["verify", str(img) + ".lmz"]) == 0
    assert "image" in capsys.readouterr().out


def test_verify_detects_corruption(tmp_path, capsys):
    src = tmp_path / "data.txt"
    src.write_bytes(b"verify me " * 100)
    assert main(["compress", str(src)]) == 0
    arc = tmp_path / "data.txt.lmz"
    raw = bytearray(arc.read_bytes())
    raw[len(raw) // 2] ^= 1
    arc.write_bytes(bytes(raw))
    assert main(["verify", str(arc)]) == 1
    assert "error" in capsys.readouterr().err


def test_decompress_leaves_no_partial_output_on_corruption(tmp_path):
    src = tmp_path / "data.txt"
    src.write_bytes(textgen.generate(4000, seed=5))
    assert main(["compress", str(src)]) == 0
    arc = tmp_path / "data.txt.lmz"
    raw = bytearray(arc.read_bytes())
    raw[-150] ^= 0x20  # inside a chunk blob
    raw[-4:] = struct.pack("<I", zlib.crc32(bytes(raw[:-4])))
    arc.write_bytes(bytes(raw))
    out = tmp_path / "out.txt"
    assert main(["decompress", str(arc), "-o", str(out)]) == 1
    assert not out.exists()


def test_wrong_builtin_version_fails(tmp_path, capsys):
    src = tmp_path / "x.txt"
    src.write_bytes(b"version check " * 20)
    assert main(["compress", str(src), "--predictor", "order0"]) == 0
    arc = tmp_path / "x.txt.lmz"
    raw = arc.read_bytes().replace(b"order0:S=256:v1", b"order0:S=256:v2")
    arc.write_bytes(raw[:-4] + struct.pack("<I", zlib.crc32(raw[:-4])))
    assert main(["decompress", str(arc)]) == 1
    assert "v2" in capsys.readouterr().err


def test_bench_reports_and_jsonl(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    rng = random.Random(1)
    (corpus / "a.txt").write_bytes(textgen.generate(4000, seed=6))
    (corpus / "b.pgm").write_bytes(mediagen.make_pgm(20, 20, rng))
    (corpus / "c.wav").write_bytes(mediagen.make_wav(300, rng))
    (corpus / "empty.txt").write_bytes(b"")
    report_path = tmp_path / "report.jsonl"
    assert main([
        "bench", str(corpus),
        "--predictors", "uniform,order0",
        "--report", str(report_path),
    ]) == 0
    out = capsys.readouterr().out
    assert "TOTAL" in out
    records = [json.loads(line) for line in report_path.read_text().splitlines()]
    files = [r for r in records if r["record"] == "file"]
    aggs = [r for r in records if r["record"] == "aggregate"]
    assert len(files) == 8 and len(aggs) == 2
    for r in files:
        assert r["ok"], r
        if r["ratio"] is not None:
            # reported ratio times compressed size recovers the original size
            assert abs(r["ratio"] * r["compressed_bytes"] - r["original_bytes"]) <= 1
    by_pred = {a["predictor"]: a for a in aggs}
    assert by_pred["order0:S=256:v1"]["ratio"] > by_pred["uniform:S=256:v1"]["ratio"]


def test_bench_records_failures_and_continues(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "ok.txt").write_bytes(b"fine " * 100)
    (corpus / "bad.pgm").write_bytes(b"P5\n10 10\n255\n short raster")
    assert main(["bench", str(corpus), "--predictors", "order0"]) == 1
    out = capsys.readouterr().out
    assert "ERROR" in out and "ok.txt" in out


def test_bench_empty_corpus_exit_zero(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    assert main(["bench", str(corpus)]) == 0


def test_bench_unreadable_file_recorded():
    from lmz.bench import run_bench

    report = run_bench(["/nonexistent/gone.txt"], ["order0:S=256:v1"])
    assert len(report.rows) == 1 and not report.rows[0].ok


def test_bench_parallel_jobs(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for i in range(3):
        (corpus / f"f{i}.txt").write_bytes(textgen.generate(2500, seed=10 + i))
    assert main(["bench", str(corpus), "--predictors", "order0", "--jobs", "2"]) == 0


def test_list_predictors(capsys):
    assert main(["list-predictors"]) == 0
    out = capsys.readouterr().out
    assert "orderK" in out and "uniform" in out and "order0" in out


def test_missing_input_is_clean_error(tmp_path, capsys):
    assert main(["compress", str(tmp_path / "nope.txt")]) == 1
    assert "error" in capsys.readouterr().err


def test_server_flow_through_cli(tmp_path, capsys):
    src = tmp_path / "wire.txt"
    src.write_bytes(b"over the wire " * 50)
    with PredictorServer(builtin_backend(PredictorSpec("uniform"))) as server:
        endpoint = f"{server.address[0]}:{server.address[1]}"
        assert main(["compress", str(src), "--server", endpoint, "--predictor", "external"]) == 0
        arc = str(src) + ".lmz"
        out = tmp_path / "wire.out"
        assert main(["decompress", arc, "--server", endpoint, "-o", str(out)]) == 0
        assert out.read_bytes() == src.read_bytes()
        # decompressing an external archive without --server fails cleanly
        assert main(["decompress", arc, "-o", str(tmp_path / "no")]) == 1


def test_console_entrypoint_smoke(tmp_path):
    src = tmp_path / "cli.txt"
    src.write_bytes(b"console script smoke test")
    proc = subprocess.run(
        [sys.executable, "-m", "lmz.cli", "compress", str(src), "--predictor", "order0"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert "ratio" in proc.stdout
