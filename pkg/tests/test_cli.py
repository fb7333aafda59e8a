import csv
import json
import subprocess
import sys

import pytest

from primemagic import __version__
from primemagic.cli import RunConfig, csv_text, main


def run(tmp_path, *args):
    status = main([*args, "--out", str(tmp_path)])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    return status, manifest


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_construct(tmp_path, capsys):
    status, man = run(tmp_path, "construct", "--q0", "5")
    assert status == 0
    assert capsys.readouterr().out.strip() == "71,5,101,89,59,29,17,113,47"
    rec = json.loads((tmp_path / "construct.json").read_text())
    assert (rec["t"], rec["u"], rec["magic_constant"]) == (12, 42, 177)
    assert rec["square"] == [71, 5, 101, 89, 59, 29, 17, 113, 47]
    (row,) = rows(tmp_path / "construct.csv")
    assert row["schema_version"] == "1" and row["a"] == "71"
    assert man["exit_status"] == 0
    assert man["config"]["q0"] == 5 and man["config"]["w"] == 7
    assert man["cutoff"]["shrink"] == 0.6 and man["cutoff"]["support"] == 0.85
    assert man["build"]


@pytest.mark.parametrize("q0, code", [(2, 3), (3, 3), (9, 1), (1, 1)])
def test_construct_errors(tmp_path, q0, code):
    status, man = run(tmp_path, "construct", "--q0", str(q0))
    assert status == code
    assert man["exit_status"] == code and man["error"]


def test_construct_exhausted(tmp_path):
    status, man = run(tmp_path, "construct", "--q0", "5", "--budget", "5")
    assert status == 2
    rec = json.loads((tmp_path / "construct.json").read_text())
    assert rec == {"q0": 5, "strategy": "lex", "exhausted": True, "candidates_tested": 5}


@pytest.mark.parametrize("flag", [["--strategy", "region"], ["--region-strict"], ["--strategy", "wtrick"]])
def test_construct_strategies(tmp_path, flag):
    status, man = run(tmp_path, "construct", "--q0", "13", *flag)
    rec = json.loads((tmp_path / "construct.json").read_text())
    assert status == 0
    assert rec["strategy"] == man["config"]["strategy"]
    assert man["W"] == 210
    if "wtrick" in flag:
        assert (rec["t"] - man["a_W"]) % 210 == 0 and (rec["u"] - man["b_W"]) % 210 == 0


def test_scan(tmp_path):
    status, man = run(tmp_path, "scan", "--max", "100")
    assert status == 0
    table = rows(tmp_path / "scan.csv")
    assert [int(r["q0"]) for r in table] == [5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]
    assert all(r["found"] == "True" for r in table)
    assert man["rows"] == 23


def test_scan_partial_failure(tmp_path):
    status, _ = run(tmp_path, "scan", "--max", "20", "--budget", "700")
    assert status == 2
    assert {r["found"] for r in rows(tmp_path / "scan.csv")} == {"True", "False"}


def test_verify(tmp_path):
    assert run(tmp_path, "verify", "--q0", "5", "--square", "71,5,101,89,59,29,17,113,47")[0] == 0
    assert run(tmp_path, "verify", "--q0", "5", "--square", "2,7,6,9,5,1,4,3,8")[0] == 1
    (row,) = rows(tmp_path / "verify.csv")
    assert row["all_prime"] == "False" and row["is_magic"] == "True"
    assert run(tmp_path, "verify", "--q0", "5", "--square", "1,2,3")[0] == 1


def test_local(tmp_path):
    assert run(tmp_path, "local", "--q0", "5", "--P", "13")[0] == 0
    table = rows(tmp_path / "local.csv")
    assert list(table[0]) == ["schema_version", "p", "core_count", "g1_num", "g1_den", "g2_num", "g2_den", "gD_num", "gD_den", "sigma_p", "beta_p"]
    seven = next(r for r in table if r["p"] == "7")
    assert (seven["core_count"], seven["g1_num"], seven["g1_den"]) == ("22", "3", "22")
    assert seven["g2_num"] == "3"
    assert next(r for r in table if r["p"] == "5")["g1_num"] == ""


def test_stats_subcommands(tmp_path):
    assert run(tmp_path, "mass", "--q0", "5", "--X", "32", "64")[0] == 0
    mass = rows(tmp_path / "mass.csv")
    assert [r["X"] for r in mass] == ["32", "64"]
    status, man = run(tmp_path, "joint", "--q0", "7", "--X", "32")
    assert status == 0 and float(rows(tmp_path / "joint.csv")[0]["C"]) > 0
    assert (man["W"], man["a_W"], man["b_W"]) == (30, 0, 0)
    assert run(tmp_path, "restricted", "--q0", "5", "--X", "64", "--d", "1", "11", "--star", "delta")[0] == 0
    restricted = rows(tmp_path / "restricted.csv")
    assert restricted[0]["A_d"] == restricted[0]["M1"]
    assert run(tmp_path, "discrepancy", "--q0", "5", "--X", "256", "--delta", "0.5")[0] == 0
    assert [r["d"] for r in rows(tmp_path / "discrepancy.csv")] == ["1", "11", "13"]
    assert run(tmp_path, "diagcheck", "--q0", "5", "--X", "64", "--weight", "indicator")[0] == 0
    assert rows(tmp_path / "diagcheck.csv")[0]["passed"] == "True"
    assert run(tmp_path, "bdh", "--X", "1000", "--Q", "1", "10")[0] == 0
    assert len(rows(tmp_path / "bdh.csv")) == 2


def test_restricted_bad_modulus(tmp_path):
    assert run(tmp_path, "restricted", "--q0", "5", "--X", "64", "--d", "7")[0] == 1


def test_resource_exit(tmp_path):
    status, man = run(tmp_path, "mass", "--q0", "5", "--X", "20000")
    assert status == 4
    assert "budget" in man["error"]


@pytest.mark.parametrize(
    "args",
    [
        ["mass", "--q0", "5"],
        ["mass", "--q0", "5", "--X", "64", "--shrink", "0.9"],
        ["discrepancy", "--q0", "5", "--X", "64", "--delta", "1.5"],
        ["scan"],
        ["verify", "--q0", "5"],
        ["bdh", "--X", "10", "--Q", "20"],
        ["construct", "--q0", "5", "--budget", "0"],
    ],
)
def test_invalid_config(tmp_path, args):
    status, man = run(tmp_path, *args)
    assert status == 1 and man["exit_status"] == 1


def test_argparse_errors_exit_1(tmp_path):
    assert main(["bogus"]) == 1
    assert main(["construct", "--q0", "five", "--out", str(tmp_path)]) == 1
    assert main(["construct", "--strategy", "random", "--q0", "5", "--out", str(tmp_path)]) == 1


def test_csv_bodies_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["mass", "--q0", "7", "--X", "48", "--weight", "lambda", "--out", str(out)]) == 0
        assert main(["local", "--q0", "7", "--P", "50", "--out", str(out)]) == 0
    for name in ("mass.csv", "local.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert sorted(p.name for p in a.iterdir()) == ["local.csv", "manifest.json", "mass.csv"]


def test_manifest_echoes_config(tmp_path):
    status, man = run(tmp_path, "discrepancy", "--q0", "5", "--X", "64", "--delta", "0.3", "--weight", "indicator", "--w", "5")
    assert status == 0
    cfg = man["config"]
    assert set(cfg) == set(RunConfig("discrepancy").__dict__)
    assert (cfg["X"], cfg["delta"], cfg["weight"], cfg["w"]) == ([64], 0.3, "indicator", 5)
    assert (man["q0"], man["w"], man["W"]) == (5, 5, 6)


def test_csv_text_has_schema_column():
    text = csv_text(["x", "y"], [[1, 0.5], [2, None]])
    assert text == "schema_version,x,y\n1,1,0.5\n1,2,\n"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "primemagic", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == __version__
