import json

import numpy as np
import pytest

from seaqt import reporting
from seaqt.cli import main
from seaqt.integrator import IntegrationConfig, integrate
from seaqt.models import SeaModel
from seaqt.scenario import (
    ScenarioError,
    apply_override,
    build_scenario,
    bundled_scenarios,
    config_hash,
    load_scenario,
    parse_matrix,
    parse_value,
)

BUNDLED = sorted(bundled_scenarios())


def _write(tmp_path, text, name="sc.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


BASIC = """
[system]
hamiltonian = { diagonal = [0.0, 1.0, 2.0] }
[initial_state]
eigenvalues = [0.6, 0.3, 0.1]
basis = "random"
[model]
kind = "sea"
tau_d = 1.0
[integration]
t1 = 2.0
"""


def test_parse_helpers():
    m = parse_matrix([[1, [0, 2]], [[0, -2], 3]], "m")
    np.testing.assert_array_equal(m, [[1, 2j], [-2j, 3]])
    np.testing.assert_array_equal(parse_matrix({"diagonal": [1, 2]}, "m"), np.diag([1, 2]))
    with pytest.raises(ScenarioError) as ei:
        parse_matrix([[1, 2], [3]], "system.hamiltonian")
    assert ei.value.field == "system.hamiltonian[1]"
    with pytest.raises(ScenarioError):
        parse_matrix({"diagonal": [1]}, "m", dim=2)
    assert parse_value("1.5") == 1.5
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value("sea") == "sea"


def test_override_and_hash():
    cfg = {"model": {"kind": "sea", "tau_d": 1.0}}
    out = apply_override(cfg, "model.tau_d=2.5")
    assert out["model"]["tau_d"] == 2.5 and cfg["model"]["tau_d"] == 1.0
    assert config_hash(out) != config_hash(cfg)
    assert config_hash(cfg) == config_hash({"model": {"tau_d": 1.0, "kind": "sea"}})
    with pytest.raises(ScenarioError):
        apply_override(cfg, "model.kind.x=1")
    with pytest.raises(ScenarioError):
        apply_override(cfg, "novalue")


def test_seeded_random_basis_is_reproducible(tmp_path):
    cfg = load_scenario(_write(tmp_path, BASIC))
    a = build_scenario({**cfg, "seed": 3})
    b = build_scenario({**cfg, "seed": 3})
    c = build_scenario({**cfg, "seed": 4})
    np.testing.assert_array_equal(a.rho0.rho, b.rho0.rho)
    assert not np.allclose(a.rho0.rho, c.rho0.rho)
    np.testing.assert_allclose(a.rho0.eigvals, [0.6, 0.3, 0.1], atol=1e-14)


@pytest.mark.parametrize(
    "edit, field",
    [
        ("model.tau_d=-1.0", "model.tau_d"),
        ("model.kind=nope", "model.kind"),
        ("integration.rel_tol=0", "integration"),
        ("initial_state.eigenvalues=[0.5, 0.6, 0.1]", "initial_state"),
    ],
)
def test_invalid_scenarios_exit_2(tmp_path, capsys, edit, field):
    code = main(["run", _write(tmp_path, BASIC), "--set", edit, "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert code == 2
    assert field in err


def test_missing_file_exit_2(capsys):
    assert main(["run", "does_not_exist.toml"]) == 2
    assert "neither a file" in capsys.readouterr().err


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_run(tmp_path, name):
    out = tmp_path / name
    assert main(["run", name, "--set", "integration.t1=1.0", "--out", str(out)]) == 0
    meta, cols, data = reporting.read_csv(out / "trajectory.csv")
    assert cols[:9] == list(reporting.BASE_COLUMNS)
    assert data.shape[0] >= 2
    summ = json.loads((out / "summary.json").read_text())
    assert summ["config_hash"] == meta["config_hash"]


def test_csv_format_and_hash_command(tmp_path, capsys):
    path = _write(tmp_path, BASIC)
    assert main(["run", path, "--seed", "5", "--out", str(tmp_path / "o")]) == 0
    assert main(["hash", path, "--seed", "5"]) == 0
    h = capsys.readouterr().out.strip().splitlines()[-1]
    lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == f"# config_hash={h}"
    assert lines[1] == "t,trace,energy,entropy,purity,theta_h,theta_s,entropy_rate,min_eig,eig_0,eig_1,eig_2"
    # full precision, round-trips exactly
    assert float(lines[2].split(",")[0]) == 0.0
    summ = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summ["degraded"] is False


def test_observables_column(tmp_path):
    assert main(["run", "sea_two_level", "--set", "integration.t1=0.5", "--out", str(tmp_path)]) == 0
    _, cols, data = reporting.read_csv(tmp_path / "trajectory.csv")
    assert cols[-1] == "obs_sigma_x"
    assert data[0, -1] == pytest.approx(0.4)


def test_sweep_and_backward(tmp_path):
    path = _write(tmp_path, BASIC)
    assert main(["run", path, "--sweep", "model.tau_d=0.5,2.0", "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "model.tau_d=0.5" / "trajectory.csv").exists()
    assert (tmp_path / "s" / "model.tau_d=2.0" / "trajectory.csv").exists()
    assert main(["run", path, "--set", "model.tau=1.0", "--set", "integration.t1=0.3",
                 "--direction", "backward", "--out", str(tmp_path / "b")]) == 0
    _, cols, data = reporting.read_csv(tmp_path / "b" / "trajectory.csv")
    t = data[:, cols.index("t")]
    s = data[:, cols.index("entropy")]
    assert t[-1] == pytest.approx(-0.3) and s[-1] < s[0]


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SEAQT_OUT", str(tmp_path / "env"))
    assert main(["run", _write(tmp_path, BASIC)]) == 0
    assert (tmp_path / "env" / "trajectory.csv").exists()


def test_compare_contrast(tmp_path):
    assert main(["compare", "ksgl_pauli", "--baseline", "sea", "--set", "integration.t1=2.0",
                 "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "compare.json").read_text())
    c = data["contrast"]
    assert c["zero_eigenvalue_contrast"] is True
    assert c["kernel_population_primary"] > 0.1
    assert c["kernel_population_baseline"] == 0.0
    assert c["initial_entropy_rate_primary"] == "inf"
    assert (tmp_path / "baseline.csv").exists()


def test_check_and_list(capsys):
    assert main(["check", "--samples", "20"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out
    assert main(["list"]) == 0
    assert "sea_two_level" in capsys.readouterr().out


def test_plot(tmp_path):
    pytest.importorskip("matplotlib")
    assert main(["compare", "ksgl_pauli", "--baseline", "sea", "--set", "integration.t1=1.0",
                 "--out", str(tmp_path), "--plot"]) == 0
    png = tmp_path / "compare.png"
    assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"


def test_degradation_report(rng):
    H = np.diag([0.0, 1.0])
    tr = integrate(SeaModel(H), np.array([[0.7, 0.2], [0.2, 0.3]]), IntegrationConfig(t1=1.0))
    assert reporting.degradation(tr, H) == []
    tr.max_trace_err = 1e-6
    assert reporting.degradation(tr, H) == ["trace drift 1.000e-06"]
