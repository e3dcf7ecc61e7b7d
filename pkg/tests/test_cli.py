import json

import numpy as np
import pytest

from hcrkit.cli import main
from hcrkit.imaging import GlyphGenConfig, generate_glyphs, load_image, save_pgm

SMALL = ["--alphabet", "A,L,Z", "--samples-per-class", "3", "--train-per-class", "2",
         "--test-per-class", "1"]


@pytest.fixture
def glyph_file(tmp_path):
    path = tmp_path / "A_0001.pgm"
    save_pgm(path, generate_glyphs(GlyphGenConfig(), "A").samples[0][0])
    return path


def test_gen_synthetic(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["gen-synthetic", "--out", str(out), "--alphabet", "A,B",
                 "--samples-per-class", "2", "--jitter-translate", "1", "--seed", "4"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["A_0000.pgm", "A_0001.pgm",
                                                     "B_0000.pgm", "B_0001.pgm"]
    assert "wrote 4" in capsys.readouterr().out


def test_preprocess_command(tmp_path, glyph_file):
    sk, bn = tmp_path / "sk.pgm", tmp_path / "bn.pgm"
    assert main(["preprocess", "--input", str(glyph_file), "--out-skeleton", str(sk),
                 "--out-binary", str(bn)]) == 0
    skel, binary = load_image(sk) == 0, load_image(bn) == 0
    assert skel.shape == binary.shape and skel.any()
    assert not (skel & ~binary).any()


@pytest.mark.parametrize("name, dim", [("proposed", 145), ("gradient", 72)])
def test_extract_command(tmp_path, glyph_file, name, dim):
    csv_out, json_out = tmp_path / "f.csv", tmp_path / "f.json"
    assert main(["extract", "--input", str(glyph_file), "--extractor", name,
                 "--out", str(csv_out)]) == 0
    values = [float(v) for v in csv_out.read_text().strip().split(",")]
    assert len(values) == dim
    assert main(["extract", "--input", str(glyph_file), "--extractor", name,
                 "--out", str(json_out)]) == 0
    assert json.loads(json_out.read_text())["values"] == values


def test_train_and_evaluate(tmp_path):
    out = tmp_path / "models"
    assert main(["train", "--out", str(out), "--extractors", "geometric",
                 "--classifiers", "mdc,mlp_bp", *SMALL]) == 0
    assert (out / "mdc_geometric.json").exists()
    assert (out / "mlp_bp_geometric_log.csv").read_text().startswith("iteration,")
    ev = tmp_path / "eval"
    assert main(["evaluate", "--out", str(ev), "--extractors", "proposed", *SMALL]) == 0
    report = json.loads((ev / "report.json").read_text())
    assert report["results"][0]["accuracy"] == 1.0


def test_compare_extractors_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["compare-extractors", "--jitter-translate", "1", "--seed", "3", *SMALL]
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    text = capsys.readouterr().out
    assert "Proposed algorithm" in text and "Per-character" in text
    rows = (a / "tables.csv").read_text().splitlines()
    assert rows[0] == "table_id,row,column,value"


def test_compare_networks(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"extractors": ["gradient"],
                               "mlp": {"hidden": 4, "max_epochs": 20, "max_iterations": 3}}))
    assert main(["compare-networks", "--config", str(cfg), "--out", str(tmp_path / "n"),
                 *SMALL]) == 0
    out = capsys.readouterr().out
    assert "MLP LM" in out and "not implemented" in out


def test_exit_codes(tmp_path, capsys):
    assert main(["evaluate", "--out", str(tmp_path), "--train-per-class", "9",
                 "--alphabet", "A", "--samples-per-class", "2"]) == 2
    blank = tmp_path / "blank.pgm"
    save_pgm(blank, np.full((10, 10), 255, dtype=np.uint8))
    assert main(["extract", "--input", str(blank), "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["extract", "--input", str(tmp_path / "none.png"),
                 "--out", str(tmp_path / "x.csv")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"nonsense": 1}')
    assert main(["evaluate", "--config", str(bad)]) == 1
    assert main(["evaluate", "--extractors", "sift"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["extract"])
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exit_code(monkeypatch, tmp_path):
    from hcrkit import harness
    from hcrkit.errors import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("singular")

    monkeypatch.setattr(harness, "train_lm", boom)
    assert main(["compare-networks", "--out", str(tmp_path), "--extractors", "geometric",
                 *SMALL]) == 3
