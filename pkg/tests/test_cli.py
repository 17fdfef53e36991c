import csv
import json
import math
import subprocess
import sys

import pytest

from glr.cli import main, render, run
from glr.gainloss import GainLossReport
from glr.indices import check_endowment_dominance
from glr.scenario_tree import Payoff, binomial


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj.to_dict()))
        return str(path)

    up_down = binomial(2.0, -1.0)
    fair = binomial(1.0, -1.0)
    return {
        "up_down": write("up_down.json", up_down),
        "fair": write("fair.json", fair),
        "arb": write("arb.json", binomial(2.0, 1.0)),
        "call": write("call.json", Payoff({1: 2.0, 2: 0.0})),
        "minus_one": write("minus_one.json", Payoff({1: -1.0, 2: -1.0})),
        "bad_keys": write("bad_keys.json", Payoff({1: 1.0, 7: 0.0})),
        "dir": str(tmp_path),
    }


def test_analyze_json(files):
    code, out, err = run(["analyze", files["up_down"], "--format", "json"])
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["alpha_star"] == pytest.approx(2.0, abs=1e-12)
    assert doc["attained"] is True
    assert doc["dual"]["value"] == pytest.approx(2.0, abs=1e-12)
    assert doc["dual"]["kernel"] == {"1": pytest.approx(1.0), "2": pytest.approx(2.0)}
    assert doc["gap"] <= 1e-9


def test_analyze_table_has_dual_columns(files):
    code, out, _ = run(["--format", "table", "analyze", files["up_down"]])
    assert code == 0
    header = [line for line in out.splitlines() if "ess_sup" in line][0].split()
    assert header == ["value", "ess_sup", "ess_inf", "E_Q[B]"]
    assert "alpha_star" in out and "gap" in out


def test_endow_constant_loss(files):
    code, out, _ = run(["endow", files["fair"], files["minus_one"], "--format", "json"])
    doc = json.loads(out)
    assert code == 0
    assert doc["alpha_star"] == pytest.approx(1.0, abs=1e-12) and doc["attained"] is False


def test_bounds_and_rho(files):
    code, out, _ = run(["bounds", files["up_down"], files["call"], "--lambda", "2", "--format", "json"])
    doc = json.loads(out)
    assert code == 0 and doc["lower"] == pytest.approx(2 / 3, abs=1e-9) and doc["upper"] == pytest.approx(2 / 3, abs=1e-9)
    code, out, _ = run(["bounds", files["up_down"], files["call"], "--lambda", "1.9", "--format", "json"])
    assert code == 3 and json.loads(out)["status"] == "infeasible"
    code, out, _ = run(["rho", files["up_down"], files["call"], "--lambda", "2", "--format", "json"])
    assert code == 0 and json.loads(out)["rho"] == pytest.approx(-2 / 3, abs=1e-9)
    code, out, _ = run(["rho", files["up_down"], files["call"], "--lambda", "1.5", "--format", "json"])
    assert code == 3 and json.loads(out)["rho"] == "-inf"


def test_infinite_value_exit_three(files):
    code, out, _ = run(["analyze", files["arb"], "--format", "json"])
    doc = json.loads(out)
    assert code == 3 and doc["alpha_star"] == "inf" and doc["dual"]["value"] == "inf"


def test_input_errors_exit_two(files, tmp_path):
    code, out, err = run(["analyze", str(tmp_path / "missing.json")])
    assert code == 2 and out == "" and err.startswith("PARSE")
    code, _, err = run(["endow", files["up_down"], files["bad_keys"]])
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"asset_count": 1, "nodes": [
        {"id": 0, "parent": None, "time": 0, "prob": 1.0, "prices": [0.0]},
        {"id": 1, "parent": 0, "time": 1, "prob": 0.7, "prices": [1.0]},
        {"id": 2, "parent": 0, "time": 1, "prob": 0.2, "prices": [-1.0]},
    ]}))
    code, _, err = run(["analyze", str(bad)])
    assert code == 2 and "node 0" in err
    code, _, _ = run(["demo", "blackscholes", "--eps", "0.1,abc"])
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        run(["bounds", files["up_down"], files["call"], "--lambda", "0.5"])
    assert exc.value.code == 2


def test_check_emits_json_lines(files):
    code, out, _ = run(["check", files["up_down"], "--instances", "3", "--seed", "5", "--format", "json"])
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert {r["property"] for r in lines} == {
        "monotonicity", "quasi_concavity", "scale_invariance", "endowment_dominance", "continuity_from_below"}
    assert all(r["passed"] and r["seed"] == 5 and r["instances"] == 3 for r in lines)


def test_same_seed_same_bytes(files, monkeypatch):
    a = run(["check", files["up_down"], "--instances", "2", "--format", "json", "--seed", "9"])
    b = run(["check", files["up_down"], "--instances", "2", "--format", "json", "--seed", "9"])
    assert a == b
    monkeypatch.setenv("GLR_SEED", "9")
    c = run(["check", files["up_down"], "--instances", "2", "--format", "json"])
    assert c == a
    d = run(["demo", "blackscholes", "--mc-samples", "20000", "--format", "json"])
    assert d == run(["demo", "blackscholes", "--mc-samples", "20000", "--format", "json"])


def test_demo_forks_and_csv(files):
    path = f"{files['dir']}/forks.csv"
    code, out, _ = run(["demo", "forks", "--n", "8", "--format", "json", "--csv", path])
    assert code == 0
    rows = [json.loads(x) for x in out.splitlines()]
    assert [r["N"] for r in rows] == [1, 2, 4, 8]
    assert all(r["lp_alpha"] == pytest.approx(r["closed_form"], abs=1e-9) for r in rows)
    with open(path, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == len(rows)


def test_demo_blackscholes(files):
    code, out, _ = run(["demo", "blackscholes", "--format", "json"])
    rows = [json.loads(x) for x in out.splitlines()]
    assert code == 0 and len(rows) == 4


def test_validate_round_trips(files):
    code, out, _ = run(["validate", files["up_down"], files["call"], "--format", "json"])
    doc = json.loads(out)
    with open(files["up_down"]) as fh:
        assert code == 0 and doc["tree"] == json.load(fh)
    assert doc["payoff"] == Payoff({1: 2.0, 2: 0.0}).to_dict()


def test_render_rules():
    rep = GainLossReport(math.inf, True, None, 0.0, 1.0)
    assert json.loads(render(rep, "json"))["value"] == "inf"
    assert "inf" in render(rep, "table")
    v = check_endowment_dominance(binomial(2.0, -1.0), Payoff({1: 0.0, 2: 0.0}))
    lines = render([v, v], "json").splitlines()
    assert len(lines) == 2 and all(json.loads(x)["property"] == "endowment_dominance" for x in lines)


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "glr", "analyze", files["up_down"], "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["alpha_star"] == pytest.approx(2.0)
    assert main(["analyze", files["arb"]]) == 3
