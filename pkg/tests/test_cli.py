"""Command-line interface: config resolution, reports, exit codes."""
import json
import subprocess
import sys

import pytest

from liesphere import cli
from liesphere.errors import SchemaViolation, UnknownCatalogId


def _run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main(list(argv) + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_precedence_defaults_file_flags():
    cfg, conflicts = cli.parse_config(["hydro", "--pairs", "3"],
                                      {"system": "gas_dynamics", "pairs": 5, "seed": 1})
    assert cfg["system"] == "gas_dynamics" and cfg["seed"] == 1 and cfg["tol"] == 1e-8
    assert cfg["pairs"] == 3 and conflicts == ["pairs"]


def test_catalog_params_from_flags():
    cfg, _ = cli.parse_config(["classify", "--catalog", "torus", "--R", "3", "--r", "1"])
    assert cfg["params"] == {"R": 3, "r": 1}


def test_unknown_keys_rejected():
    with pytest.raises(SchemaViolation):
        cli.parse_config(["hydro"], {"sytem": "decoupled"})
    with pytest.raises(SchemaViolation):
        cli.parse_config(["classify", "--catalog", "torus", "--radius", "3"])
    with pytest.raises(UnknownCatalogId):
        cli.parse_config(["classify", "--catalog", "nope"])
    with pytest.raises(SchemaViolation):
        cli.parse_config(["classify"], {"subcommand": "hydro"})


def test_config_file_and_conflict_log(tmp_path, caplog):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"system": "decoupled", "pairs": 4}))
    code, rep = _run(["hydro", "--config", str(conf), "--pairs", "2"], tmp_path)
    assert code == 0
    assert rep["conflicts"] == ["pairs"] and rep["config"]["pairs"] == 2
    assert "flag overrides config file value for pairs" in caplog.text


def test_reports_are_byte_identical(tmp_path):
    argv = ["transform-check", "--catalog", "torus", "--elements", "2", "--seed", "3"]
    out = tmp_path / "r.json"
    cli.main(argv + ["--out", str(out)])
    first = out.read_bytes()
    cli.main(argv + ["--out", str(out)])
    assert out.read_bytes() == first


@pytest.mark.parametrize("argv,key,tag", [
    (["classify", "--catalog", "torus"], "label", None),
    (["residual", "--eq", "calapso", "--field", "u=4/(1+R1^2+R2^2)", "--grid", "9"], None, None),
    (["hydro", "--system", "gas_dynamics", "--pairs", "3"], None, "eq6.4"),
    (["correspond", "--grid", "9"], None, "eq8.2"),
])
def test_subcommands_pass(tmp_path, argv, key, tag):
    code, rep = _run(argv, tmp_path)
    assert code == 0 and rep["passed"] is True
    assert rep["tool"] == "liesphere" and rep["backend"] in ("numba", "numpy")
    if key:
        assert rep["results"][key] == "dupin"
    if tag:
        assert tag in json.dumps(rep["tags"])


def test_reconstruct_exponential(tmp_path):
    code, rep = _run(["reconstruct", "--mode", "exponential", "--grid", "17"], tmp_path)
    assert code == 0


def test_exit_codes(tmp_path):
    assert cli.main(["classify", "--catalog", "torus", "--bogus", "1"]) == 1
    # a step far beyond the CFL bound is a numerical failure
    assert cli.main(["evolve", "--grid", "16", "--T", "1", "--dt", "0.5",
                     "--out", str(tmp_path / "e.json")]) == 2
    # a wrong solution is reported with exit code 2
    code, rep = _run(["residual", "--eq", "calapso", "--field", "u=2+R1*R2"], tmp_path)
    assert code == 2 and rep["passed"] is False


def test_csv_and_trajectory(tmp_path):
    csv_path = tmp_path / "f.csv"
    traj = tmp_path / "t.csv"
    code, _ = _run(["evolve", "--grid", "16", "--T", "0.01", "--dt", "0.001", "--csv",
                    str(csv_path), "--csv-field", "a", "--trajectory", str(traj)], tmp_path)
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "R1,R2,value" and len(lines) == 1 + 16 * 16
    assert traj.read_text().splitlines()[0] == "t,I,drift"


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "liesphere.cli", "catalog"], capture_output=True,
                         text=True, check=True)
    rep = json.loads(out.stdout)
    assert "torus_of_revolution" in rep["results"]["surfaces"]
