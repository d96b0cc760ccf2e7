import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from superchern.cli import InputError, main, parse_job

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_job_fields():
    job = parse_job(["check-closed", "--in", str(DATA / "flat_pair.json"), "--tol", "1e-8", "--t", "0.5", "--t", "1"])
    assert job.command == "check-closed"
    assert job.tol == 1e-8
    assert job.t_values == [0.5, 1.0]


def test_parse_job_errors():
    with pytest.raises(InputError, match="input not found: nowhere.json"):
        parse_job(["check-closed", "--in", "nowhere.json"])
    with pytest.raises(InputError, match="unknown command"):
        parse_job(["bogus"])
    with pytest.raises(InputError, match="needs --in"):
        parse_job(["segre"])
    with pytest.raises(InputError):
        parse_job(["selftest", "--selftest-filter", "12"])


def test_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "segre", "--in", bad)
    assert code == 1 and "malformed input" in err


@pytest.mark.parametrize(
    "name,needle",
    [("bad_grading.json", "theta must preserve grading"), ("aliased.json", "band limit")],
)
def test_invalid_connection_exit_code(capsys, name, needle):
    code, out, err = run(capsys, "check-closed", "--in", DATA / name)
    assert code == 1 and needle in err and out == ""


def test_check_closed_report(capsys):
    code, out, err = run(capsys, "check-closed", "--in", DATA / "flat_pair.json")
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "check-closed"
    assert rep["passed"] is True
    assert len(rep["inputs_digest"]) == 64
    assert set(rep["checks"]) == {"closed at t=0.0", "closed at t=0.5", "closed at t=1.0", "closed at t=2.0"}
    assert "runtime" in err and "runtime" not in out


def test_check_failure_exit_code(capsys):
    # a negative tolerance cannot be met
    code, out, _ = run(capsys, "check-closed", "--in", DATA / "flat_pair.json", "--tol", "-1")
    assert code == 2
    assert json.loads(out)["passed"] is False


def test_t_sweep_csv(tmp_path, capsys):
    out_csv = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "t-sweep", "--in", DATA / "flat_pair.json", "--out", out_csv)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert list(rows[0]) == ["t", "degree", "subtorus", "real", "imag"]
    assert {float(r["t"]) for r in rows} == {0.0, 0.5, 1.0, 2.0}
    assert all(abs(float(r["real"])) < 1e-6 for r in rows if r["degree"] == "2")
    rep = json.loads(out)
    assert rep["residuals"]["max_deviation"] <= 1e-6


def test_cs_morphism_line_bundles(capsys):
    # holonomies exp(2 pi i 0.2) and exp(2 pi i 0.4): c1(u) = 0.4 - 0.2
    code, out, _ = run(capsys, "cs-morphism", "--in", DATA / "line_bundles.json")
    assert code == 0
    c1 = json.loads(out)["results"]["total_class"]["terms"]["c1"]["coefficients"]["0"]
    assert c1[0] == pytest.approx(0.2, abs=1e-9)


def test_cs1_and_holonomy(capsys):
    for command in ("cs1", "holonomy"):
        code, out, _ = run(capsys, command, "--in", DATA / "flat_pair.json")
        assert code == 0, command
        assert json.loads(out)["passed"]


def test_cs1_on_curved_connection_is_input_error(capsys):
    code, _, err = run(capsys, "cs1", "--in", DATA / "curved.json")
    assert code == 1 and "not flat" in err


def test_cs_flat_and_segre(capsys):
    code, out, _ = run(capsys, "cs-flat", "--in", DATA / "torus_holonomy.json")
    assert code == 0
    terms = json.loads(out)["results"]["total_class"]["terms"]
    assert terms["c1"]["coefficients"]["0"][0] == pytest.approx(0.25)
    code, out, _ = run(capsys, "segre", "--in", DATA / "total_class.json")
    assert code == 0
    s = json.loads(out)["results"]["segre"]["terms"]
    assert s["c1"]["coefficients"] == {"0,1": "-1/2", "2,3": -3}
    # s2 = c1^2 - c2 = 2 * (1/2) * 3 + 2/3
    assert s["c2"]["coefficients"] == {"0,1,2,3": "11/3"}


def test_ch_form_reports_pairings(capsys):
    code, out, _ = run(capsys, "ch-form", "--in", DATA / "curved.json", "--t", "0", "--t", "1.3")
    assert code == 0
    pairings = json.loads(out)["results"]["pairings"]
    assert set(pairings) == {"t=0.0", "t=1.3"}
    assert pairings["t=0.0"]["0"][0] == pytest.approx(1.0)


def test_report_is_deterministic(capsys):
    args = ("t-sweep", "--in", DATA / "flat_pair.json")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second


def test_selftest_filter(capsys):
    code, out, err = run(capsys, "selftest", "--selftest-filter", "6,8")
    assert code == 0
    rep = json.loads(out)
    assert [c["number"] for c in rep["results"]["criteria"]] == [6, 8]
    assert "[PASS] criterion 6" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "superchern", "segre", "--in", str(DATA / "total_class.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "segre"
