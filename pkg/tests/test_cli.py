import json

import pytest

from gmsdam.cli import build_parser, main
from gmsdam.io import read_error_table

SMALL = """
[mesh]
nx = 10
ny = 10
coarse_nx = 2
coarse_ny = 2

[coefficient]
family = channels_inclusions

[gmsfem]
li_list = 1, 2

[output]
formats = csv
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(SMALL)
    return path


def test_run_fine(config, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(config), "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["files"]) == {"permeability.csv", "pressure.csv", "saturation.csv"}
    assert manifest["iterations"]["fine"]["converged"]
    assert "fine:" in capsys.readouterr().out


def test_run_gmsfem(config, tmp_path):
    out = tmp_path / "g"
    assert main(["run", "--config", str(config), "--mode", "gmsfem", "--li", "2",
                 "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["reports"] == [{"Li": 2, "coarse_dim": 10}]


def test_sweep_writes_table_and_manifest(config, tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(config), "--out-dir", str(out)]) == 0
    rows = read_error_table(out / "error_table.csv")
    assert [r["Li"] for r in rows] == [1, 2]
    assert [r["coarse_dim"] for r in rows] == [9, 10]
    manifest = json.loads((out / "manifest.json").read_text())
    on_disk = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    assert manifest["files"] == on_disk


def test_sweep_is_reproducible(config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(config), "--out-dir", str(a), "--li-list", "1"]) == 0
    assert main(["sweep", "--config", str(config), "--out-dir", str(b), "--li-list", "1"]) == 0
    for f in a.glob("*.csv"):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_basis(config, tmp_path):
    out = tmp_path / "basis"
    assert main(["basis", "--config", str(config), "--li", "3", "--node", "4",
                 "--out-dir", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"chi_4.csv", "basis_4_0.csv", "basis_4_2.csv", "weight.csv", "eigenvalues.csv"} <= names


def test_basis_bad_node(config, tmp_path, capsys):
    assert main(["basis", "--config", str(config), "--node", "99",
                 "--out-dir", str(tmp_path)]) == 1
    assert "out of range" in capsys.readouterr().err


def test_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 7


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[solver]\nbogus = 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "bogus" in capsys.readouterr().err


def test_unknown_flag_prints_usage():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--frobnicate"])
    assert exc.value.code != 0


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
