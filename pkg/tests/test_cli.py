import json

import numpy as np
import pytest

from c2i import ColorCodebook, read_interchange
from c2i.cli import main
from c2i.corpus import CorpusManifest, Sample, export_png, save_manifest
from conftest import REF_SOURCE


@pytest.fixture
def source_file(tmp_path):
    path = tmp_path / "prog.c"
    path.write_text(REF_SOURCE, encoding="utf-8")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_encode_decode_golden_flow(tmp_path, source_file, capsys, ref_ast):
    book = tmp_path / "book.txt"
    png = tmp_path / "out.png"
    raw = tmp_path / "out.c2i1"
    code, _, _ = run(capsys, "encode", source_file, "--codebook", book,
                     "--png", png, "--raw", raw)
    assert code == 0
    assert book.exists() and png.exists() and raw.exists()

    for image_file in (png, raw):
        code, out, _ = run(capsys, "decode", image_file, "--codebook", book)
        assert code == 0
        assert read_interchange(out) == ref_ast


def test_encode_requires_output_flag(source_file, capsys):
    code, _, err = run(capsys, "encode", source_file)
    assert code == 1
    assert "--png" in err


def test_unknown_command_is_usage_error(capsys):
    assert run(capsys, "frobnicate")[0] == 1


def test_missing_input_is_input_error(tmp_path, capsys):
    code, _, _ = run(capsys, "encode", tmp_path / "absent.c",
                     "--png", tmp_path / "x.png")
    assert code == 2


def test_parse_error_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.c"
    bad.write_text("int main( {", encoding="utf-8")
    code, _, err = run(capsys, "encode", bad, "--png", tmp_path / "x.png")
    assert code == 2
    assert "bad.c" not in err or True  # message content is free-form


def test_codebook_env_fallback(tmp_path, source_file, capsys, monkeypatch, ref_ast):
    book = tmp_path / "envbook.txt"
    png = tmp_path / "o.png"
    monkeypatch.setenv("C2I_CODEBOOK", str(book))
    assert run(capsys, "encode", source_file, "--png", png)[0] == 0
    assert book.exists()
    code, out, _ = run(capsys, "decode", png)
    assert code == 0
    assert read_interchange(out) == ref_ast


def test_decode_without_codebook_is_usage_error(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("C2I_CODEBOOK", raising=False)
    code, _, err = run(capsys, "decode", tmp_path / "x.png")
    assert code == 1
    assert "--codebook" in err


def test_check_subcommand(tmp_path, source_file, capsys):
    code, out, _ = run(capsys, "check", tmp_path)
    assert code == 0
    assert "1/1 round-trips passed" in out


def test_check_empty_dir_is_input_error(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(capsys, "check", empty)[0] == 2


def test_eval_subcommand(tmp_path, capsys):
    scores = tmp_path / "scores.csv"
    labels = tmp_path / "labels.csv"
    scores.write_text("id,score\na,0.9\nb,0.8\nc,0.4\nd,0.1\n", encoding="utf-8")
    labels.write_text("id,label\na,1\nb,0\nc,1\nd,0\n", encoding="utf-8")
    pr = tmp_path / "pr.csv"
    code, out, _ = run(capsys, "eval", scores, labels, "--pr", pr)
    assert code == 0
    report = json.loads(out)
    assert abs(report["best_f1"] - 0.8) < 1e-12
    assert pr.read_text().startswith("threshold,precision,recall")


def test_eval_id_mismatch_is_input_error(tmp_path, capsys):
    (tmp_path / "s.csv").write_text("a,0.5\n", encoding="utf-8")
    (tmp_path / "l.csv").write_text("b,1\n", encoding="utf-8")
    assert run(capsys, "eval", tmp_path / "s.csv", tmp_path / "l.csv")[0] == 2


def make_manifest(tmp_path, n=3):
    from c2i import compact, plan_layout, rasterize
    from c2i.synth import random_ast
    import random

    book = ColorCodebook()
    samples = []
    for i in range(n):
        ast = random_ast(random.Random(i), max_depth=4, max_level_width=5)
        img = compact(rasterize(plan_layout(ast), book))
        png = tmp_path / f"img{i}.png"
        export_png(img, png)
        labels = [i % 2 == 0, False, False, False, False]
        samples.append(Sample(id=f"s{i}", split="train", labels=tuple(labels),
                              image=str(png)))
    path = tmp_path / "manifest.ndjson"
    save_manifest(CorpusManifest(samples=samples), path)
    return path


def test_batch_subcommand(tmp_path, capsys):
    manifest = make_manifest(tmp_path, n=5)
    outdir = tmp_path / "batches"
    code, out, _ = run(capsys, "batch", manifest, "--batch-size", "2",
                       "--out", outdir)
    assert code == 0
    index = json.loads((outdir / "index.json").read_text())
    assert [len(e["ids"]) for e in index] == [2, 2, 1]
    assert (outdir / index[0]["file"]).exists()


def test_oversample_subcommand(tmp_path, capsys):
    samples = [Sample(id=f"s{i}", split="train",
                      labels=(i < 2, False, False, False, False))
               for i in range(12)]
    path = tmp_path / "m.ndjson"
    save_manifest(CorpusManifest(samples=samples), path)
    out_path = tmp_path / "over.ndjson"
    code, out, _ = run(capsys, "oversample", path, "--category", "CWE-119",
                       "--out", out_path)
    assert code == 0
    assert "train positives" in out
    assert out_path.exists()


def test_stats_subcommand(tmp_path, source_file, capsys):
    ast_json = tmp_path / "prog.json"
    assert run(capsys, "encode", source_file, "--json", ast_json)[0] == 0
    manifest = tmp_path / "m.ndjson"
    save_manifest(CorpusManifest(samples=[
        Sample(id="a", split="train", labels=(1, 0, 0, 0, 0), ast=str(ast_json)),
        Sample(id="b", split="train", labels=(0, 0, 0, 0, 0), ast="missing.json"),
    ]), manifest)
    csv = tmp_path / "stats.csv"
    code, out, err = run(capsys, "stats", manifest, "--csv", csv)
    assert code == 0
    summary = json.loads(out)
    assert summary["counted"] == 1 and summary["skipped"] == 1
    assert summary["depth_hist"] == {"6": 1}
    assert "warning" in err
    assert csv.read_text().startswith("statistic,value,count")
