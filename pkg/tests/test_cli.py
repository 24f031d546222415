import csv
import io
import json
import subprocess
import sys

import pytest

from conftest import SCENARIOS
from fdgame import cli, validation
from fdgame.scenario import ScenarioError, Sweep, load_scenario, scenario_from_dict

NOMINAL_FILE = str(SCENARIOS / "nominal.json")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_region_table(capsys, nominal):
    code, out, _ = run(capsys, "region", "--scenario", NOMINAL_FILE)
    assert code == 0
    table = rows(out)
    lo, hi = nominal.phi * nominal.p_cf, nominal.phi
    for r in table:
        ch = float(r["c_hd"])
        feasible = r["feasible"] == "true"
        assert feasible == (lo - 1e-12 <= ch <= hi + 1e-12), r
        if not feasible:
            assert r["pi_tfd_min"] == "nan"
    top = next(r for r in table if abs(float(r["c_hd"]) - hi) < 1e-9)
    assert (top["pi_tfd_min"], top["pi_tfd_max"], top["feasible"]) == ("0", "0", "true")
    bottom = next(r for r in table if abs(float(r["c_hd"]) - lo) < 1e-9)
    assert float(bottom["pi_tfd_min"]) == pytest.approx(1.0)
    assert float(bottom["pi_tfd_max"]) == pytest.approx(1.0)


def test_region_without_edges(capsys):
    code, out, _ = run(capsys, "region", "--scenario", NOMINAL_FILE, "--no-edges",
                       "--start", "0.1", "--stop", "0.2", "--step", "0.05")
    assert code == 0
    assert [r["c_hd"] for r in rows(out)] == ["0.1", "0.15", "0.2"]


def test_solve_reference_point(capsys):
    code, out, _ = run(capsys, "solve", "--scenario", NOMINAL_FILE, "--c-hd", "0.3",
                       "--pi-tfd", "0.3")
    assert code == 0
    doc = json.loads(out)
    assert doc["strategy"]["pi_w"] == pytest.approx(0.28330, abs=5e-6)
    assert doc["strategy"]["pi_tA"] == pytest.approx(0.20835, abs=5e-6)
    assert doc["costs"]["c_fd"] == pytest.approx(0.42)
    assert doc["max_abs_residual"] <= 1e-9 and doc["equilibrium"] is True


@pytest.mark.parametrize("args,pmf", [
    (["--c-hd", "1.0", "--pi-tfd", "0"], [1, 0, 0, 0]),
    (["--c-hd", "0.18", "--pi-tfd", "1"], [0, 0, 0, 1]),
])
def test_solve_pinch_points(capsys, args, pmf):
    code, out, _ = run(capsys, "solve", "--iota-c", "0.3", "--iota-f", "0.6", "--beta", "0.8",
                       *args)
    assert code == 0
    s = json.loads(out)["strategy"]
    assert [s["pi_w"], s["pi_tA"], s["pi_tB"], s["pi_tfd"]] == pytest.approx(pmf, abs=1e-12)


def test_no_equilibrium_exit_code(capsys):
    code, _, err = run(capsys, "solve", "--scenario", str(SCENARIOS / "nonproportional_costs.json"))
    assert code == 3 and "rank" in err
    code, _, _ = run(capsys, "solve", "--scenario", NOMINAL_FILE, "--c-hd", "0.9")
    assert code == 3
    code, _, _ = run(capsys, "solve", "--scenario", NOMINAL_FILE, "--c-hd", "0.3",
                     "--pi-tfd", "0.95")
    assert code == 3


def test_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"network": {"alpha": 3,\n "theta": }}')
    code, _, err = run(capsys, "region", "--scenario", str(bad))
    assert code == 2 and "bad.json:2:" in err
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"constants": {"beta": 0.7, "iota_c": "x", "iota_f": 0.5}}))
    code, _, err = run(capsys, "region", "--scenario", str(schema))
    assert code == 2 and "constants.iota_c" in err
    code, _, err = run(capsys, "region")
    assert code == 2
    code, _, err = run(capsys, "simulate", "--scenario", NOMINAL_FILE, "--seed", "-1")
    assert code == 2
    code, _, err = run(capsys, "region", "--iota-c", "0.3", "--iota-f", "0.6", "--beta", "0.5")
    assert code == 2 and "beta" in err


def test_design_table(capsys, nominal):
    code, out, _ = run(capsys, "design", "--scenario", NOMINAL_FILE, "--pi-tfd", "0")
    assert code == 0
    (r,) = rows(out)
    assert float(r["c_hd_min"]) == pytest.approx(0.220128, abs=1e-6)
    assert float(r["c_hd_max"]) == pytest.approx(0.670320, abs=1e-6)
    assert r["degenerate"] == "false"


def test_optimum_single_and_grid(capsys):
    code, out, _ = run(capsys, "optimum", "--iota-c", "0.6", "--iota-f", "0.7", "--beta", "0.7")
    assert code == 0
    (r,) = rows(out)
    assert r["boundary_label"] == "dR3"
    assert float(r["t_star_over_phi"]) == pytest.approx(1.30489, abs=1e-4)
    code, out, _ = run(capsys, "optimum", "--grid", "6", "--beta", "0.7")
    assert code == 0 and len(rows(out)) == 15
    code, _, _ = run(capsys, "optimum", "--grid", "6", "--beta", "0.7", "--absolute")
    assert code == 2


def test_optimum_absolute_columns(capsys, nominal):
    code, out, _ = run(capsys, "optimum", "--scenario", NOMINAL_FILE, "--absolute")
    assert code == 0
    (r,) = rows(out)
    assert float(r["t_star"]) == pytest.approx(float(r["t_star_over_phi"]) * nominal.phi)


def test_poa_table(capsys):
    code, out, _ = run(capsys, "poa", "--scenario", str(SCENARIOS / "low_interference_b07.json"))
    assert code == 0
    table = rows(out)
    assert len(table) == 101
    assert table[0]["poa"] == "inf" and table[0]["t_min"] == "0"
    assert all(float(r["poa"]) >= 1 for r in table[1:])


def test_simulate_is_byte_identical(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        code = cli.main(["simulate", "--scenario", NOMINAL_FILE, "--slots", "20000",
                         "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert doc["seed"] == 20180101 and doc["n_slots"] == 20000


def test_simulate_mixed_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", NOMINAL_FILE, "--slots", "20000",
                       "--pi1", "0.25,0.25,0.25,0.25", "--format", "csv", "--c-hd", "0.3")
    assert code == 0
    table = rows(out)
    assert table[0]["quantity"] == "aggregate"
    assert all(abs(float(r["z"])) < 5 for r in table)


def test_verify_passes_without_simulation(capsys):
    code, out, err = run(capsys, "verify", "--scenario", NOMINAL_FILE, "--samples", "100",
                         "--no-montecarlo")
    assert code == 0
    assert json.loads(out)["ok"] is True
    assert "overall: PASS" in err


def test_verify_reports_infeasible_prices(capsys):
    code, out, _ = run(capsys, "verify", "--scenario", str(SCENARIOS / "nonproportional_costs.json"),
                       "--samples", "100", "--no-montecarlo")
    assert code == 0
    status = {c["name"]: c["status"] for c in json.loads(out)["checks"]}
    assert status["cost-consistency"] == "infeasible"


def test_verify_failure_exit_code(capsys, monkeypatch):
    def broken(c):
        return validation.CheckResult("price-of-anarchy", "fail", "forced")
    monkeypatch.setattr(validation, "check_poa", broken)
    code, _, err = run(capsys, "verify", "--scenario", NOMINAL_FILE, "--samples", "10",
                       "--no-montecarlo", "--format", "csv")
    assert code == 4 and "overall: FAIL" in err


@pytest.mark.parametrize("cmd,extra", [
    ("region", []), ("poa", ["--start", "0", "--stop", "1", "--step", "0.1"]),
    ("optimum", ["--grid", "8", "--beta", "0.7"]),
])
def test_figures_are_written(tmp_path, cmd, extra):
    fig = tmp_path / f"{cmd}.png"
    scen = [] if cmd == "optimum" else ["--scenario", NOMINAL_FILE]
    code = cli.main([cmd, *scen, *extra, "--figure", str(fig), "--out", str(tmp_path / "t.csv")])
    assert code == 0
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert (tmp_path / "t.csv").read_text().count("\n") > 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fdgame", "design", "--iota-c", "0.2",
                          "--iota-f", "0.4", "--beta", "0.8", "--pi-tfd", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert rows(res.stdout)[0]["degenerate"] == "true"


def test_shipped_scenarios_load():
    for path in sorted(SCENARIOS.glob("*.json")):
        sc = load_scenario(path)
        assert sc.name == path.stem
        sc.constants


def test_scenario_rules():
    with pytest.raises(ScenarioError, match="exactly one"):
        scenario_from_dict({"network": {"alpha": 3, "theta": 1, "kappa": 1, "snr_ref": 1,
                                        "beta": 0.9},
                            "constants": {"beta": 0.9, "iota_c": 0.1, "iota_f": 0.2}})
    with pytest.raises(ScenarioError, match="network"):
        scenario_from_dict({"network": {"alpha": 3, "theta": 1, "kappa": 1, "snr_ref": 1}})
    with pytest.raises(ScenarioError, match="profile"):
        scenario_from_dict({"constants": {"beta": 0.9, "iota_c": 0.1, "iota_f": 0.2},
                            "simulation": {"profile": ["t_A", "w"],
                                           "pi1": {"pi_w": 1, "pi_tA": 0, "pi_tB": 0,
                                                   "pi_tfd": 0}}})
    sc = scenario_from_dict({"constants": {"beta": 0.8, "iota_c": 0.1, "iota_f": 0.2},
                             "costs": {"c_hd": 0.5}})
    assert sc.costs.c_fd == pytest.approx(0.8)
    assert sc.constants.phi == 1.0


def test_sweep_is_inclusive():
    assert Sweep(0.0, 1.0, 0.1).values()[-1] == 1.0
    assert len(Sweep(0.05, 0.70, 0.01).values()) == 66
    with pytest.raises(ScenarioError):
        Sweep(1.0, 0.0, 0.1).values()
