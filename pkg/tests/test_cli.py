import csv
import io
import json

import pytest

from rejectfear import cli, verify


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_example(capsys):
    code, out, _ = run(capsys, "solve", "--gamma", "1", "--k", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.split("\n\n")[0])))
    assert [round(float(r["x"]), 3) for r in rows] == [0.392, 0.106]


def test_solve_unbiased(capsys):
    _, out, _ = run(capsys, "solve", "--gamma", "0", "--k", "4", "--format", "json")
    doc = json.loads(out)
    assert [r["x"] for r in doc["rows"]] == [0.8, 0.6, 0.4, 0.2]
    assert doc["summary"]["method"] == "closed-form"


def test_solve_k100_respects_cap(capsys):
    _, out, _ = run(capsys, "solve", "--gamma", "0.1", "--k", "100", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out.split("\n\n")[0])))
    assert len(rows) == 100
    assert sum(float(r["x"]) > 2 / 3 for r in rows) <= 5


def test_csv_uses_nine_significant_digits(capsys):
    _, out, _ = run(capsys, "solve", "--gamma", "0.5", "--k", "1", "--format", "csv")
    x = out.splitlines()[1].split(",")[1]
    assert x == "0.422649731"


def test_payoff_table(capsys):
    _, out, _ = run(capsys, "table", "--which", "payoff", "--k-max", "1", "--gamma", "0", "--format", "csv")
    assert out.splitlines() == ["k,unbiased,gamma=0", "1,0.25,0.25"]


def test_payoff_table_matches_reference(capsys):
    _, out, _ = run(capsys, "table", "--which", "payoff", "--k-max", "10", "--gamma", "0.05", "--format", "csv")
    from rejectfear.reference import PAYOFF_TABLE

    for row in csv.DictReader(io.StringIO(out)):
        assert float(row["gamma=0.05"]) == pytest.approx(PAYOFF_TABLE[0.05][int(row["k"])], abs=1e-5)


def test_freezing_table_has_reference_column(capsys):
    _, out, _ = run(capsys, "table", "--which", "freezing", "--gamma", "0.5", "--k-max", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 6
    assert rows[0]["reference"] == "0.422"


def test_figures(capsys):
    _, out, _ = run(capsys, "figure", "--which", "portfolio_line", "--gamma", "0", "--k", "100", "--format", "csv")
    xs = [float(line.split(",")[1]) for line in out.splitlines()[1:]]
    assert xs == pytest.approx([(101 - i) / 101 for i in range(1, 101)], abs=1e-9)

    _, out, _ = run(capsys, "figure", "--which", "deltas", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    deltas = [float(r["delta"]) for r in rows]
    turn = deltas.index(max(deltas))
    assert all(a < b for a, b in zip(deltas[:turn], deltas[1:turn + 1]))
    assert all(a > b for a, b in zip(deltas[turn:], deltas[turn + 1:]))
    assert abs(float(rows[turn]["x"]) - 2 / 3) < 0.1

    for which in ("h_curve", "m_curve", "x1_vs_gamma"):
        code, out, _ = run(capsys, "figure", "--which", which, "--points", "5", "--format", "csv")
        assert code == 0 and len(out.splitlines()) >= 6


def test_bounds_and_overshoot(capsys):
    code, out, _ = run(capsys, "bounds", "--gamma", "0.5", "--format", "json")
    assert code == 0 and json.loads(out)["summary"]["p_gamma"] == pytest.approx(0.450839, abs=1e-6)
    code, out, _ = run(capsys, "overshoot", "--points", "3", "--format", "csv")
    assert code == 0 and out.count("true") >= 6
    code, out, _ = run(capsys, "overshoot", "--a", "0.5", "--b", "0.9", "--format", "json")
    assert json.loads(out)["rows"][0]["overshoots"] is True


def test_oracle_and_mc(capsys):
    code, out, _ = run(capsys, "oracle", "--k", "2", "--gamma", "0.5", "--format", "json")
    assert code == 0 and json.loads(out)["summary"]["method"] == "grid-oracle"
    code, out, _ = run(capsys, "--seed", "4", "mc", "--samples", "20000", "--tau", "0.05", "--lam", "3",
                       "--format", "json")
    summary = json.loads(out)["summary"]
    assert summary["seed"] == 4 and summary["gamma"] == pytest.approx(0.1)


def test_out_writes_manifest(tmp_path, capsys):
    target = tmp_path / "solve.csv"
    code, out, _ = run(capsys, "solve", "--k", "3", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    manifest = json.loads((tmp_path / "solve.csv.manifest.json").read_text())
    assert manifest["outputs"] == [str(target)]
    assert manifest["command"] == "solve"
    assert manifest["parameters"]["k"] == 3


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\ngamma = 0.5\nk=3\nformat=json\n")
    _, out, _ = run(capsys, "solve", "--config", str(cfg), "--k", "2")
    summary = json.loads(out)["summary"]
    assert summary["gamma"] == 0.5 and summary["k"] == 2


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nonsense=1\n")
    code, _, err = run(capsys, "solve", "--config", str(cfg))
    assert code == 2 and "nonsense" in err


def test_domain_error_exit(capsys):
    code, _, err = run(capsys, "solve", "--k", "0")
    assert code == 2 and "error" in err


def test_verify_exit_codes(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "--suite", "overshoot")
    assert code == 0 and "failed  0" in out
    monkeypatch.setitem(verify.SUITES, "overshoot", lambda: [verify.Check("forced", False, -1.0)])
    code, _, _ = run(capsys, "verify", "--suite", "overshoot")
    assert code == 1


def test_global_flag_position(capsys):
    _, before, _ = run(capsys, "--format", "csv", "solve", "--k", "2")
    _, after, _ = run(capsys, "solve", "--k", "2", "--format", "csv")
    assert before == after
