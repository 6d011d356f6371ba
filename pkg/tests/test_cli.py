import json
import subprocess
import sys

import pytest

from rasc import cli

FAST_MCDE = ["--N-sam", "300", "--l-max", "30", "--P-th", "1e-3", "--eps-sigma", "0.02",
             "--R-max", "1"]


def test_constellation(tmp_path, capsys):
    assert cli.main(["constellation", "--L", "2", "--Nbv", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "index,re,im" and len(lines) == 17
    out = tmp_path / "c.csv"
    assert cli.main(["constellation", "--L", "3", "--Nbv", "2", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 82
    man = json.loads((tmp_path / "c.csv.manifest.json").read_text())
    assert man["subcommand"] == "constellation"
    assert man["parameters"]["L"] == 3
    assert "wall_clock_s" in man


def test_filters_listing(capsys):
    assert cli.main(["filters", "--L", "2", "--Nbv", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "fb,taps,affine_class"
    assert len(lines) == 25
    row44 = next(line for line in lines if line.startswith("44,"))
    assert row44.endswith(",28")


def test_filters_rank_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["filters", "--L", "2", "--Nbv", "2", "--q", "3", "--rank", "--collapse", *FAST_MCDE]
    assert cli.main([*common, "--out", str(a), "--json", str(tmp_path / "a.json")]) == 0
    assert cli.main([*common, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "fb,taps,threshold_db,gap_db"
    assert len(json.loads((tmp_path / "a.json").read_text())) == 8


def test_threshold_json(tmp_path):
    out = tmp_path / "t.json"
    assert cli.main(["threshold", "--L", "2", "--Nbv", "2", "--q", "3", "--fb", "11",
                     *FAST_MCDE, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["fb"] == 11 and doc["mcde"]["N_sam"] == 300
    assert doc["result"]["gap_db"] > 0


def test_simulate_and_config_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nL = 2\nNbv = 2\nq = 3\nfb = 11\nNs = 50\n"
                   "snr-db-list = 0, 4\nframes = 3\nmax_iter = 20\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["simulate", "--config", str(cfg), "--frames", "2", "--out", str(b)]) == 0
    ra = a.read_text().splitlines()
    rb = b.read_text().splitlines()
    assert ra[0] == "snr_db,frames,symbol_errors,ser,fer,avg_iters"
    assert len(ra) == 3
    assert ra[1].split(",")[1] == "3" and rb[1].split(",")[1] == "2"
    c = tmp_path / "c.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(c)]) == 0
    assert c.read_bytes() == a.read_bytes()


@pytest.mark.parametrize("argv,code", [
    (["filters", "--L", "2", "--Nbv", "2", "--rank", "--q", "3", "--N-sam", "1"], 2),
    (["threshold", "--L", "2", "--Nbv", "2", "--q", "3", "--fb", "3"], 3),
    (["constellation", "--L", "2"], 2),
    (["constellation", "--L", "5", "--Nbv", "9"], 2),
    (["constellation", "--L", "2", "--Nbv", "2", "--out", "/nonexistent/dir/x.csv"], 4),
])
def test_exit_codes(argv, code, capsys):
    assert cli.main(argv) == code
    assert "rasc:" in capsys.readouterr().err


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    assert cli.main(["constellation", "--config", str(cfg), "--L", "2", "--Nbv", "2"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rasc", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
