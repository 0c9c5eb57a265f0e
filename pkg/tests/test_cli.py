import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from laxforge import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def schema(command):
    text = resources.files("laxforge").joinpath(f"schemas/{command}.schema.json").read_text()
    return json.loads(text)


def valid(command, text):
    obj = json.loads(text)
    jsonschema.validate(obj, schema(command))
    return obj


def test_hierarchy(capsys):
    code, out, _ = run(capsys, "hierarchy", "--system", "pii", "--n", "3")
    assert code == 0
    obj = valid("hierarchy", out)
    assert [m["alpha"] for m in obj["members"]] == ["0", "1", "2", "3"]
    assert all(m["verified"] for m in obj["members"])
    assert obj["members"][1]["u"] == "1/(x)" or obj["members"][1]["u"] == "(1)/(x)"


def test_hierarchy_seed_only(capsys):
    code, out, _ = run(capsys, "hierarchy", "--n", "0")
    assert code == 0 and len(json.loads(out)["members"]) == 1


def test_hierarchy_bad_config(capsys, monkeypatch):
    assert run(capsys, "hierarchy", "--n", "-1")[0] == 1
    monkeypatch.setenv("LAXFORGE_CAP", "2")
    code, _, err = run(capsys, "hierarchy", "--n", "3")
    assert code == 1 and "LAXFORGE_CAP" in err


def test_transform_ode7(capsys):
    code, out, _ = run(capsys, "transform", "--system", "ode7", "--t", "1",
                       "--u", "sqrt-x", "--params", "2,0,-1")
    assert code == 0
    obj = valid("transform", out)
    p = obj["output"]["params"]
    assert (p["alpha"], p["beta"], p["gamma"]) == ("2", "1/2", "-2")
    assert obj["verified"] is True


def test_transform_pii(capsys):
    code, out, _ = run(capsys, "transform", "--system", "pii", "--branch", "plus",
                       "--alpha", "0", "--u", "0")
    assert code == 0
    obj = valid("transform", out)
    assert obj["output"]["alpha"] == "1"
    assert obj["output"]["u"] in ("1/(x)", "(1)/(x)")


@pytest.mark.parametrize("t", ["1", "2", "3", "4"])
def test_transform_roundtrip(capsys, t):
    code, out, _ = run(capsys, "transform", "--system", "ode7", "--t", t, "--u", "sqrt-x",
                       "--params", "2,0,-1", "--roundtrip")
    assert code == 0
    obj = valid("transform", out)
    assert obj["roundtrip"]["identity"] is True
    assert obj["roundtrip"]["via"] == "T" + str(cli.INVERSE_T[int(t)])


def test_transform_non_solution_fails_verification(capsys):
    code, out, _ = run(capsys, "transform", "--system", "ode7", "--t", "1", "--u", "sqrt-x",
                       "--params", "2,0,0")
    assert code == 2 and json.loads(out)["input_verified"] is False


def test_transform_degenerate(capsys):
    # alpha = gamma = 0 makes every T_i denominator vanish
    code, _, err = run(capsys, "transform", "--system", "ode7", "--t", "1", "--u", "x",
                       "--params", "0,0,0")
    assert code == 3 and "degenerate" in err


def test_transform_grid(capsys):
    code, out, _ = run(capsys, "transform", "--system", "pii", "--branch", "plus",
                       "--alpha", "1", "--init", "1,-1", "--interval", "1,2", "--tol", "1e-12")
    assert code == 0
    obj = valid("transform", out)
    assert obj["output"]["params"]["alpha"] == "0"


def test_lift(capsys):
    code, out, _ = run(capsys, "lift", "--params", "2,0,-1")
    assert code == 0
    obj = valid("lift", out)
    assert obj["checks"] == {"second_equation": True, "first_integral": True}
    code, out, _ = run(capsys, "lift", "--params", "2,0,0")
    assert code == 2 and json.loads(out)["checks"]["first_integral"] is False


def test_verify_compat(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "compat")
    assert code == 0
    obj = valid("verify", out)
    assert {c["name"] for c in obj["checks"]} == {"compat:pii", "compat:ode7"}


def test_verify_expansion_ode7(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "expansion", "--system", "ode7")
    assert code == 0
    orders = valid("verify", out)["checks"][0]["detail"]["orders"]
    assert {"lambda:-2", "lambda:-1", "lambda:0"} <= set(orders)


def test_verify_dt_numeric(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "dt-numeric", "--tol", "1e-10")
    assert code == 0
    obj = valid("verify", out)
    sups = obj["checks"][0]["detail"]["sup"]
    assert max(sups.values()) < 1e-7


def test_integrate_and_csv(capsys, tmp_path):
    args = ("integrate", "--system", "pii", "--params", "alpha=1", "--init", "1,-1",
            "--interval", "1,2", "--n-grid", "11", "--tol", "1e-12")
    code, out, _ = run(capsys, *args)
    assert code == 0
    obj = valid("integrate", out)
    assert obj["params"] == {"alpha": "1"} and obj["residual"]["sup"] < 1e-10
    code, out, _ = run(capsys, *args, "--format", "csv", "--out", str(tmp_path))
    assert code == 0
    assert out.splitlines()[0] == "x,u,ux" and len(out.splitlines()) == 12
    assert (tmp_path / "integrate.csv").read_text() == out


def test_expand(capsys):
    code, out, _ = run(capsys, "expand", "--system", "pii")
    assert code == 0
    obj = valid("expand", out)
    assert abs(obj["numeric"]["slope"] - 2) <= 0.2


def test_out_directory_and_determinism(capsys, tmp_path):
    args = ("hierarchy", "--n", "4", "--out", str(tmp_path), "--seed", "7")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    assert (tmp_path / "hierarchy.json").read_text() == first


def test_bad_configs(capsys):
    assert run(capsys, "transform", "--system", "ode7", "--t", "1", "--params", "a,0,1")[0] == 1
    assert run(capsys, "transform", "--system", "kdv")[0] == 1
    assert run(capsys, "verify", "--suite", "nope")[0] == 1
    assert run(capsys, "integrate", "--system", "pii", "--tol", "1")[0] == 1
    assert run(capsys, "lift", "--format", "csv", "--params", "2,0,-1")[0] == 1
    assert run(capsys)[0] == 1


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "laxforge.cli", "hierarchy", "--n", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n"] == 1
