import argparse
import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

from hslab import catalog, cli
from conftest import run_cli

GOLDEN = Path(__file__).parent / "golden"
REPORT_KEYS = {"subject", "grid", "checks", "lambda_samples", "versions", "seed"}


def assert_matches(actual, expected, path="report"):
    """Structural equality; floats only up to rounding noise."""
    if isinstance(expected, dict):
        assert isinstance(actual, dict) and actual.keys() == expected.keys(), path
        for k in expected:
            assert_matches(actual[k], expected[k], f"{path}.{k}")
    elif isinstance(expected, list):
        assert isinstance(actual, list) and len(actual) == len(expected), path
        for n, (a, e) in enumerate(zip(actual, expected)):
            assert_matches(a, e, f"{path}[{n}]")
    elif isinstance(expected, float) and not isinstance(actual, (str, bool)):
        assert np.isclose(actual, expected, rtol=1e-6, atol=1e-11), f"{path}: {actual} != {expected}"
    else:
        assert actual == expected, f"{path}: {actual!r} != {expected!r}"


def compare_golden(text, name):
    rep = json.loads(text)
    rep.pop("versions")
    path = GOLDEN / name
    if os.environ.get("HSLAB_UPDATE_GOLDEN"):
        path.write_text(json.dumps(rep, indent=2) + "\n")
    assert_matches(rep, json.loads(path.read_text()))


def checks_by_name(text):
    return {c["name"]: c for c in json.loads(text)["checks"]}


@pytest.mark.parametrize("text,value", [("i", 1j), ("2", 2), ("-0.5+1j", -0.5 + 1j),
                                        ("exp(i*pi/5)", np.exp(1j * np.pi / 5)),
                                        ("e^(i*pi/5)", np.exp(1j * np.pi / 5))])
def test_parse_lambda(text, value):
    assert abs(cli.parse_lambda(text) - value) < 1e-15


@pytest.mark.parametrize("text", ["0", "foo", "__import__('os')", "1/0", "i*"])
def test_parse_lambda_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_lambda(text)


def test_parse_u_and_grids():
    np.testing.assert_array_equal(cli.parse_u("k"), [0, 0, 0, 1])
    np.testing.assert_allclose(cli.parse_u("3,0,4"), [0, 0.6, 0, 0.8])
    assert len(cli.parse_u("1,0,0,0,0,0,0")) == 8
    for bad in ("1,2", "0,0,0", "a,b,c"):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.parse_u(bad)
    assert cli.parse_grids("64,32") == [32, 64]
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_grids("32")


def test_check_report_schema_and_golden(tmp_path_factory):
    code, text = run_cli(tmp_path_factory, "check", "clifford_torus", "--grid", "16")
    assert code == 0
    rep = json.loads(text)
    assert set(rep) == REPORT_KEYS
    assert {"nx", "ny", "h"} <= set(rep["grid"])
    names = [c["name"] for c in rep["checks"]]
    assert names == sorted(names)
    for c in rep["checks"]:
        assert {"name", "residual", "tolerance", "pass"} <= set(c)
        assert isinstance(c["pass"], bool)
    assert set(rep["versions"]) == {"hslab", "numpy", "scipy", "python"}
    compare_golden(text, "check_clifford_torus_16.json")


def test_super_report_golden(super_report):
    code, text = super_report
    assert code == 0
    rep = json.loads(text)
    assert set(rep) == REPORT_KEYS and rep["seed"] == 0
    compare_golden(text, "super_polynomial_seed0.json")


def test_exit_code_counts_failures(tmp_path_factory):
    code, text = run_cli(tmp_path_factory, "check", "complex_line", "--grid", "16")
    checks = checks_by_name(text)
    assert code == sum(not c["pass"] for c in checks.values()) == 1
    assert not checks["lagrangian"]["pass"] and abs(checks["lagrangian"]["residual"] - 1) < 1e-12
    assert all(c["pass"] for n, c in checks.items() if n.startswith("flatness"))


def test_nonharmonic_rotor_flatness_fails(tmp_path_factory):
    code, text = run_cli(tmp_path_factory, "check", "nonharmonic_rotor", "--grid", "32",
                         "--lambdas", "exp(i*pi/4)")
    checks = checks_by_name(text)
    assert code == 2
    assert all(not c["pass"] for n, c in checks.items() if n.startswith("flatness"))


def test_grid_file_check(tmp_path_factory, tmp_path):
    path = tmp_path / "catenoid.json"
    catalog.save_grid(path, catalog.builtin("lagrangian_catenoid").immersion(32))
    code, text = run_cli(tmp_path_factory, "check", str(path))
    assert code == 0, [c for c in json.loads(text)["checks"] if not c["pass"]]
    assert json.loads(text)["grid"]["nx"] == 32


def test_nonconformal_file_aborts(tmp_path_factory, tmp_path, capsys):
    X = catalog.builtin("clifford_torus").immersion(16)
    X.X.values[..., 2] *= 2
    path = tmp_path / "squashed.json"
    catalog.save_grid(path, X)
    code, text = run_cli(tmp_path_factory, "check", str(path))
    assert code == 2 and text is None
    assert "not conformal" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["check", "klein_bottle"], ["check", "/nonexistent/grid.json"],
                                  ["convergence", "nonharmonic_rotor_missing"]])
def test_bad_subjects(tmp_path_factory, argv, capsys):
    code, text = run_cli(tmp_path_factory, *argv)
    assert code == 2 and text is None
    assert capsys.readouterr().err.startswith("hslab: error")


def test_convergence_needs_catalog_entry(tmp_path_factory, tmp_path):
    path = tmp_path / "torus.json"
    catalog.save_grid(path, catalog.builtin("clifford_torus").immersion(16))
    code, _ = run_cli(tmp_path_factory, "convergence", str(path))
    assert code == 2


def test_tolerance_from_environment(tmp_path_factory, monkeypatch):
    monkeypatch.setenv(cli.TOL_ENV, "1e-3")
    _, text = run_cli(tmp_path_factory, "check", "cmc_cylinder", "--grid", "16")
    assert checks_by_name(text)["rho_plus_sigma"]["tolerance"] == 1e-3
    _, text = run_cli(tmp_path_factory, "check", "cmc_cylinder", "--grid", "16", "--tol", "1e-5")
    assert checks_by_name(text)["rho_plus_sigma"]["tolerance"] == 1e-5
    monkeypatch.setenv(cli.TOL_ENV, "tight")
    code, _ = run_cli(tmp_path_factory, "check", "cmc_cylinder", "--grid", "16")
    assert code == 2


def test_plot_data_csv(tmp_path_factory, tmp_path):
    csv_path = tmp_path / "curves.csv"
    code, _ = run_cli(tmp_path_factory, "convergence", "clifford_torus", "--grids", "16,32",
                      "--lambdas", "i,2", "--plot-data", str(csv_path))
    assert code == 0
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["lambda_re", "lambda_im", "h", "residual"]
    lams = {(float(r[0]), float(r[1])) for r in rows[1:]}
    hs = {float(r[2]) for r in rows[1:]}
    assert lams == {(0.0, 1.0), (2.0, 0.0)} and len(hs) == 2


def test_check_deterministic(tmp_path_factory):
    a = run_cli(tmp_path_factory, "check", "lagrangian_catenoid", "--grid", "16", "--seed", "3")
    b = run_cli(tmp_path_factory, "check", "lagrangian_catenoid", "--grid", "16", "--seed", "3")
    assert a == b
