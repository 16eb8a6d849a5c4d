import csv
import math
import subprocess
import sys

import pytest

from scbadmm.cli import (
    LOG_HEADER,
    PROFILE_HEADER,
    SUMMARY_HEADER,
    build_problem,
    main,
    performance_profile,
)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_scalar(tmp_path):
    assert main(["run", "--instance", "scalar", "--out", str(tmp_path)]) == 0
    log, summary = _read(tmp_path / "log.csv"), _read(tmp_path / "summary.csv")
    assert log[0] == LOG_HEADER and summary[0] == SUMMARY_HEADER
    row = dict(zip(summary[0], summary[1]))
    assert row["status"] == "tolerance_met"
    assert float(row["eta"]) <= 1e-6
    assert row["eta"] == log[-1][1]
    assert row["iterations"] == log[-1][0]


def test_max_iter_exit_code(tmp_path):
    assert main(["run", "--instance", "scalar", "--max-iter", "1", "--out", str(tmp_path)]) == 2
    row = dict(zip(*_read(tmp_path / "summary.csv")))
    assert row["status"] == "max_iter" and row["iterations"] == "1"


def test_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1 1 1.0\n1 2 oops\n")
    assert main(["run", "--instance", str(bad)]) == 1
    assert ":3:" in capsys.readouterr().err


def test_missing_instance(capsys):
    assert main(["run", "--instance", "nonsense:1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_instance_file_runs(tmp_path):
    f = tmp_path / "q.txt"
    f.write_text("2 3\n1 1 -1\n1 2 0.5\n2 2 -2\nc 0.1 -0.2\n")
    assert main(["run", "--instance", str(f), "--max-iter", "3000", "--out", str(tmp_path / "o")]) in (0, 2)
    assert (tmp_path / "o" / "summary.csv").exists()


def test_deterministic(tmp_path):
    args = ["run", "--instance", "qsdp:n=5,m_E=3,rank_B=2", "--seed", "4", "--max-iter", "300"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_spec_file_and_override(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text("instance: scalar\nmax_iter: 1\nsolver: direct_admm\n")
    out = tmp_path / "o"
    assert main(["run", "--spec", str(spec), "--out", str(out)]) == 2
    assert main(["run", "--spec", str(spec), "--max-iter", "1000", "--out", str(out)]) == 0
    row = dict(zip(*_read(out / "summary.csv")))
    assert row["solver"] == "direct_admm"


def test_compare_identical_solvers(tmp_path):
    code = main(["compare", "--instance", "scalar", "--solvers", "scb,scb", "--out", str(tmp_path)])
    assert code == 0
    prof = _read(tmp_path / "profile.csv")
    assert prof[0] == PROFILE_HEADER
    assert {r[2] for r in prof[1:]} == {"scb", "scb#2"}
    assert all(float(r[0]) == 1.0 for r in prof[1:])
    table = _read(tmp_path / "table.csv")
    assert len(table) == 2
    assert table[0] == ["instance", "seed", "scb_iter", "scb_time", "scb_status",
                        "scb#2_iter", "scb#2_time", "scb#2_status"]


def test_compare_seeds(tmp_path):
    code = main(["compare", "--instance", "qsdp:n=4,m_E=2,rank_B=2", "--seeds", "0-2",
                 "--max-iter", "3000", "--out", str(tmp_path)])
    assert code in (0, 2)
    assert len(_read(tmp_path / "table.csv")) == 4
    assert len(_read(tmp_path / "summary.csv")) == 7


def test_compare_needs_two_labels(capsys):
    assert main(["compare", "--instance", "scalar", "--solvers", "scb"]) == 1


def test_performance_profile():
    pts = performance_profile({"a": [1.0, 2.0, math.inf], "b": [2.0, 2.0, 3.0]})
    a = [(r, f) for r, f, s in pts if s == "a"]
    b = [(r, f) for r, f, s in pts if s == "b"]
    assert a == [(1.0, 2 / 3)]
    assert b == [(1.0, 2 / 3), (2.0, 1.0)]


@pytest.mark.parametrize("source", ["qsdp:n=4,m_E=2,rank_B=1", "ncm:n=4,alpha=0.2",
                                    "ncm:n=3,alpha=0.2,norm=spectral", "qp2:m=3,f_dim=2,g_dim=2",
                                    "qp:m=4,f_dim=2,theta=2x1,g_dim=2,phi=1"])
def test_build_problem(source):
    assert build_problem(source, 0).c.size > 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "scbadmm", "run", "--instance", "scalar"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "tolerance_met" in r.stdout
