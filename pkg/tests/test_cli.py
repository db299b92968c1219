from __future__ import annotations

import json

import pytest

from misgossip.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_single_node(capsys):
    code, out, _ = run_cli(capsys, "solve", "--n", "1", "--lambda-e", "1", "--lambda-s", "1")
    data = json.loads(out)
    assert code == 0 and data["F"] == 1.0 and data["x1"] == 1.0


def test_solve_without_gossip(capsys):
    _, out, _ = run_cli(capsys, "solve", "--n", "10", "--lambda", "0")
    data = json.loads(out)
    assert data["F"] == pytest.approx(1.0, abs=1e-15)
    assert data["x1"] == pytest.approx(10.0, abs=1e-12)


def test_solve_without_mutation(capsys):
    _, out, _ = run_cli(capsys, "solve", "--p", "0", "--n", "10", "--format", "csv")
    assert out.splitlines()[1].startswith("1.0,")


def test_solve_tables_and_divergence_marker(capsys):
    _, out, _ = run_cli(capsys, "solve", "--n", "3", "--lambda-s", "0", "--tables")
    data = json.loads(out)
    assert data["age_diverges"] is True and data["x1"] is None
    assert len(data["t"]) == 6


def test_invalid_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--p", "1.5"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--horizon", "-1"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_simulate_is_deterministic(capsys):
    args = ("simulate", "--p", "0", "--horizon", "1e4", "--seed", "7")
    code, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert code == 0 and first == second
    report = json.loads(first)
    assert report["F_hat"] == 1.0


def test_simulate_report_fields_and_trace(capsys):
    code, out, err = run_cli(capsys, "simulate", "--n", "3", "--horizon", "2e3", "--probes",
                             "--verbose", "--trace-limit", "5")
    report = json.loads(out)
    assert {"F_hat", "F_ci95", "x1_hat", "x1_ci95", "event_count"} <= set(report)
    assert len(report["probes"]) == 12
    lines = [json.loads(line) for line in err.splitlines()]
    assert len(lines) == 5
    assert set(lines[0]) == {"time", "kind", "i", "j", "honest", "F", "X1"}


def spec_file(tmp_path, sim=True):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({
        "base": {"n": 10, "lambda_e": 1, "lambda_s": 1, "lambda": 1, "p": 0.9},
        "sweep": {"parameter": "p", "values": [0.0, 0.9]},
        "sim": {"horizon": 3e4, "seed": 1, "replications": 1} if sim else None,
        "outputs": ["F", "x1"],
    }))
    return path


def test_sweep_writes_csv_and_json(tmp_path, capsys):
    out_csv, out_json = tmp_path / "a.csv", tmp_path / "a.json"
    assert main(["sweep", str(spec_file(tmp_path)), "--out", str(out_csv)]) == 0
    again = tmp_path / "b.csv"
    assert main(["sweep", str(spec_file(tmp_path)), "--out", str(again)]) == 0
    assert out_csv.read_bytes() == again.read_bytes()
    assert main(["sweep", str(spec_file(tmp_path)), "--format", "json", "--out", str(out_json)]) == 0
    assert len(json.loads(out_json.read_text())["rows"]) == 2


def test_sweep_builtin_with_override(capsys):
    code, out, _ = run_cli(capsys, "sweep", "fig4_n", "--horizon", "2e3")
    assert code == 0 and len(out.splitlines()) == 11


def test_sweep_unreadable_spec_exit_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "sweep", str(tmp_path / "nope.json"))
    assert code == 2 and "cannot read" in err


def test_compare_exit_codes(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "compare", str(spec_file(tmp_path)))
    assert code == 0 and out.splitlines()[-1].startswith("PASS")
    code, out, _ = run_cli(capsys, "compare", str(spec_file(tmp_path)), "--perturb-spread")
    assert code == 1 and out.splitlines()[-1].startswith("FAIL")
    code, _, _ = run_cli(capsys, "compare", str(spec_file(tmp_path, sim=False)))
    assert code == 2
