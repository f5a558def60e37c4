from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from fisherlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def value_of(text: str) -> float:
    return float(text.splitlines()[0].split("=")[1])


@pytest.mark.parametrize("argv,expected", [
    (["--quantity", "qfi", "--n", "2", "--eta", "1"], 12.0),
    (["--quantity", "sql", "--k", "2", "--eta", "0.95", "--eta-d", "0.6"], 2.28),
    (["--quantity", "qfi", "--n", "1", "--eta", "0.5"], 1.6),
    (["--quantity", "qfi-general", "--n", "1", "--eta", "0.5"], 1.6),
    (["--quantity", "parity", "--n", "1", "--phi", "0.5"], 0.5403023058681398),
    (["--quantity", "single", "--n", "1", "--phi", "0.7853981633974483"], 4.0),
    (["--quantity", "noon", "--n", "1", "--eta", "0.5"], 1.6),
    (["--quantity", "ratio", "--k", "1"], 2.0),
])
def test_eval_values(capsys, argv, expected):
    code, out, _ = run(capsys, "eval", *argv)
    assert code == 0
    assert value_of(out) == pytest.approx(expected, rel=1e-9)
    assert "engine:" in out


def test_eval_threshold(capsys):
    code, out, _ = run(capsys, "eval", "--quantity", "threshold", "--k", "2", "--axis", "eta_d")
    assert code == 0 and value_of(out) == pytest.approx(0.547, abs=0.002)


@pytest.mark.parametrize("argv", [
    ["eval", "--quantity", "qfi", "--eta", "1e-1"],
    ["eval", "--quantity", "qfi", "--eta", "1.5"],
    ["eval", "--quantity", "qfi", "--eta", "nan"],
    ["eval", "--quantity", "bogus"],
    ["eval", "--quantity", "qfi", "--n", "two"],
    ["sweep", "--quantity", "qfi", "--eta", "0.5,0.2"],
    ["sweep", "--quantity", "qfi", "--eta", "0:1"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_domain_error_exit_2(capsys):
    code, _, err = run(capsys, "eval", "--quantity", "ratio", "--k", "9")
    assert code == 2 and "k must lie" in err


def test_singularity_exit_3(capsys):
    code, _, err = run(capsys, "eval", "--quantity", "cfi", "--n", "1", "--phi", "1.5707962")
    assert code == 3 and "singularity" in err
    code, _, _ = run(capsys, "eval", "--quantity", "single", "--n", "2", "--phi", "0")
    assert code == 3


def test_sweep_csv_format(tmp_path, capsys):
    path = tmp_path / "qfi.csv"
    code, _, _ = run(capsys, "sweep", "--quantity", "qfi", "--n", "1,2", "--eta", "0:1:3", "--out", str(path))
    assert code == 0
    raw = path.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["n", "eta", "qfi"]
    assert len(rows) == 7
    assert rows[2] == ["1", "0.5", "1.6000000000000005"]  # 17 significant digits
    assert float(rows[-1][2]) == pytest.approx(12.0)


def test_sweep_empty_grid(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    code, _, _ = run(capsys, "sweep", "--quantity", "qfi", "--eta", "", "--out", str(path))
    assert code == 0
    assert path.read_text() == "n,eta,qfi\n"


def test_sweep_thread_count_does_not_change_output(tmp_path, capsys, monkeypatch):
    args = ["sweep", "--quantity", "cfi", "--n", "1,2", "--phi", "0.3,0.9", "--eta", "0.5,1", "--eta-d", "0.8"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--threads", "1", "--out", str(a)]) == 0
    monkeypatch.setenv("FISHERLAB_THREADS", "3")
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--quantity", "ratio", "--k", "2", "--eta-d", "0.5,0.6", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["columns"][-1] == "ratio"
    assert [r[3] for r in doc["rows"]] == [0.5, 0.6]
    assert doc["rows"][0][-1] < 1.0 < doc["rows"][1][-1]


def test_sweep_threshold_nan_on_no_crossing(capsys):
    code, out, _ = run(capsys, "sweep", "--quantity", "threshold", "--k", "1", "--axis", "eta_p",
                       "--eta-d", "0.4,1")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[1][-1] == "nan"
    assert float(rows[2][-1]) == pytest.approx(0.7072, abs=0.002)


def test_sweep_figure2_row(capsys):
    code, out, _ = run(capsys, "sweep", "--quantity", "figure2", "--eta", "1", "--starts", "4")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["eta", "sql", "hb10", "noon20", "optimal20"]
    eta, s, hb, noon, opt = map(float, rows[1])
    assert (eta, s) == (1.0, 20.0)
    assert hb == pytest.approx(220.0, rel=1e-10)
    assert noon == pytest.approx(400.0, rel=1e-10)
    assert opt == pytest.approx(400.0, abs=1e-6)


def test_sweep_feasibility(capsys):
    code, out, _ = run(capsys, "sweep", "--quantity", "feasibility", "--k", "1", "--resolution", "3")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["k", "eta_p", "eta", "eta_d", "ratio", "feasible"]
    assert len(rows) == 1 + 27
    assert rows[-1][-1] == "true" and rows[1][-1] == "false"


def test_unwritable_path(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--quantity", "qfi", "--out", str(tmp_path / "no" / "x.csv"))
    assert code != 0 and "cannot write" in err


def test_validate_default_and_strict(capsys):
    code, out, _ = run(capsys, "validate", "--draws", "50")
    assert code == 0
    assert "[PASS] P1" in out and "[REPORT] P2" in out and "MISMATCH" in out
    code, out, _ = run(capsys, "validate", "--draws", "20", "--strict-p2")
    assert code == 4 and "[FAIL] P2" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fisherlab", "eval", "--quantity", "qfi", "--n", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("qfi = 12")
