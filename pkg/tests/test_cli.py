import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from wpcclean import __version__
from wpcclean.cli import main
from wpcclean.scada_io import MATANG, read_dataset


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "synth.csv"
    code = main(
        ["synth", "--spec", "matang", "--output", str(path), "--n", "30000", "--type1", "0.02",
         "--type2", "0.05", "--type3", "0.1", "--type3-levels", "600", "--seed", "1"]
    )
    assert code == 0
    return path


def test_synth_writes_a_truth_column(synth_csv):
    rows = _rows(synth_csv)
    assert len(rows) == 30000
    counts = {}
    for r in rows:
        counts[r["truth"]] = counts.get(r["truth"], 0) + 1
    assert counts == {"normal": 24900, "type1": 600, "type2": 1500, "type3": 3000}


def test_synth_custom_truth_column(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["synth", "--spec", "gaojiagou", "--output", str(out), "--n", "500", "--truth-col", "gt"]) == 0
    assert set(_rows(out)[0]) >= {"gt"}


def test_clean_outputs(synth_csv, tmp_path, capsys):
    out, report, renders = tmp_path / "out.csv", tmp_path / "report.json", tmp_path / "img"
    code = main(["clean", "--spec", "matang", "--input", str(synth_csv), "--output", str(out),
                 "--report", str(report), "--render-dir", str(renders)])
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 30000
    assert {r["label"] for r in rows} <= {"normal", "type1", "type2", "type3"}
    assert "truth" in rows[0]
    # truth type1 rows are exactly the type1 labels
    assert all((r["truth"] == "type1") == (r["label"] == "type1") for r in rows)
    data = json.loads(report.read_text())
    assert 2 <= data["n_best"] <= 9
    assert sum(data["counts"].values()) == 30000
    names = {p.name for p in renders.iterdir()}
    assert names == {"raw.png", "contour.png", "labels.png"} | {f"opened_n{n}.png" for n in range(2, 10)}
    with Image.open(renders / "raw.png") as im:
        assert im.size == (432, 288)
    assert f"n_best: {data['n_best']}" in capsys.readouterr().out


def test_clean_output_is_reproducible(synth_csv, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["clean", "--spec", "matang", "--input", str(synth_csv), "--output", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_table(synth_csv, capsys):
    assert main(["sweep", "--spec", "matang", "--input", str(synth_csv)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n\tD"
    assert [int(line.split("\t")[0]) for line in lines[1:9]] == list(range(2, 10))
    key, value = lines[9].split("\t")
    assert key == "n_best" and 2 <= int(value) <= 9


def test_bench_with_truth(synth_csv, tmp_path, capsys):
    metrics = tmp_path / "m.json"
    code = main(["bench", "--spec", "matang", "--input", str(synth_csv), "--truth-col", "truth",
                 "--metrics", str(metrics)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("| method")
    data = json.loads(metrics.read_text())
    assert data["image"]["recall"] >= 0.90
    assert data["image"]["false_flag_rate"] <= 0.10
    assert abs(data["lof"]["R"] - 10.0) <= 0.1


def test_bench_csv_and_external(synth_csv, tmp_path, capsys):
    cleaned = tmp_path / "cleaned.csv"
    assert main(["clean", "--spec", "matang", "--input", str(synth_csv), "--output", str(cleaned)]) == 0
    capsys.readouterr()
    table = tmp_path / "t.csv"
    code = main(["bench", "--spec", "matang", "--input", str(synth_csv), "--methods", "image",
                 "--external", f"mine={cleaned}", "--format", "csv", "--output", str(table), "--parallel"])
    assert code == 0
    rows = list(csv.reader(table.read_text().splitlines()))
    assert [r[0] for r in rows[1:]] == ["image", "mine"]
    assert rows[1][1] == rows[2][1]  # same labels, same removal rate


def test_render_formats(synth_csv, tmp_path):
    png, pgm = tmp_path / "c.png", tmp_path / "c.pgm"
    assert main(["render", "--spec", "matang", "--input", str(synth_csv), "--output", str(png)]) == 0
    assert main(["render", "--spec", "matang", "--input", str(synth_csv), "--output", str(pgm)]) == 0
    with Image.open(png) as im:
        png_bits = np.asarray(im.convert("L")) < 128
    assert pgm.read_bytes().startswith(b"P")
    with Image.open(pgm) as im:
        pgm_bits = np.asarray(im.convert("L")) < 128
    assert png_bits.shape == (288, 432)
    assert np.array_equal(png_bits, pgm_bits) or np.array_equal(png_bits, ~pgm_bits)
    assert png_bits.any()
    forced = tmp_path / "c.img"
    assert main(["render", "--spec", "matang", "--input", str(synth_csv), "--output", str(forced), "--format", "pgm"]) == 0
    assert forced.read_bytes() == pgm.read_bytes()


def test_spec_from_flags_and_overrides(tmp_path):
    out = tmp_path / "s.csv"
    flags = ["--cut-in", "3", "--rated-speed", "13", "--cut-out", "25", "--rated-power", "2000"]
    assert main(["synth", "--output", str(out), "--n", "300", *flags]) == 0
    ds = read_dataset(out, MATANG)
    assert ds.P.max() <= 2000 * 1.1 and ds.P.max() > 1500 * 1.1
    spec_file = tmp_path / "t.spec"
    spec_file.write_text("cut_in = 3\nrated_speed = 13\ncut_out = 25\nrated_power = 1500\n")
    assert main(["synth", "--output", str(out), "--n", "300", "--spec", str(spec_file), "--rated-power", "900"]) == 0
    assert read_dataset(out, MATANG).P.max() <= 900 * 1.1


def test_missing_input_file(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    code = main(["clean", "--spec", "matang", "--input", str(missing), "--output", str(tmp_path / "o.csv")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "nope.csv" in err and len(err.strip().splitlines()) == 1


def test_missing_spec(synth_csv, tmp_path, capsys):
    code = main(["clean", "--input", str(synth_csv), "--output", str(tmp_path / "o.csv"), "--cut-in", "3"])
    assert code == 1
    assert "--rated-speed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["clean", "--spec", "matang"], ["synth", "--output", "x.csv", "--spec", "matang", "--n", "abc"],
     ["synth", "--output", "x.csv", "--spec", "nosuchpreset.spec"]],
)
def test_bad_arguments_report_an_error(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) in (1, 2)
    assert capsys.readouterr().err.startswith("error:")


def test_bad_arguments_usage_is_exit_1(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["bench", "--spec", "matang", "--input", "x", "--format", "xml"]) == 1


def test_invalid_synth_fractions(tmp_path, capsys):
    assert main(["synth", "--spec", "matang", "--output", str(tmp_path / "x.csv"), "--type1", "0.7", "--type2", "0.7"]) == 1


def test_malformed_external_is_rejected(synth_csv, capsys):
    assert main(["bench", "--spec", "matang", "--input", str(synth_csv), "--methods", "lof",
                 "--external", "broken"]) == 1


def test_module_entry_point(tmp_path):
    done = subprocess.run([sys.executable, "-m", "wpcclean", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and __version__ in done.stdout
    done = subprocess.run([sys.executable, "-m", "wpcclean", "clean", "--spec", "matang",
                           "--input", str(tmp_path / "none.csv"), "--output", str(tmp_path / "o.csv")],
                          capture_output=True, text=True)
    assert done.returncode == 2 and done.stderr.startswith("error:")
