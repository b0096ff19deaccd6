import numpy as np
import pytest

from fluxqnd.config import default_config
from fluxqnd.experiments import REGISTRY, scenario_from
from fluxqnd.readout import Mechanism
from fluxqnd.runner import run_experiment


def load(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_registry_matches_config_experiments():
    from fluxqnd.config import EXPERIMENTS

    assert set(REGISTRY) == set(EXPERIMENTS)


def test_scaled_and_physical_scenarios_agree():
    cfg = default_config("fig6")
    phys = scenario_from(cfg, Mechanism.IDC, epsilon_over_kappa=1.22)
    unit = scenario_from(cfg, Mechanism.IDC, epsilon_over_kappa=1.22, scaled=True)
    assert unit.kappa == 1.0
    assert unit.chi_z == pytest.approx(phys.chi_z / phys.kappa)
    assert unit.kerr == pytest.approx(phys.kerr / phys.kappa)
    assert unit.drive_amplitude == pytest.approx(1.22)


def test_fig4b_rows(tmp_path):
    cfg = default_config("fig4b")
    cfg["grid"]["kappa_over_2pi_mhz"] = [8.0, 16.0]
    run_experiment(cfg, tmp_path)
    header, rows = load(tmp_path / "fig4b_fidelity.csv")
    assert header == ["mechanism", "kappa_tau", "snr", "fidelity", "kappa_over_2pi_mhz", "tau_ns"]
    assert len(rows) == 3 * 2 * 2
    ideal = [r for r in rows if r[0] == "ideal" and float(r[4]) == 16.0 and float(r[5]) == 80.0][0]
    assert float(ideal[1]) == pytest.approx(2 * np.pi * 16e6 * 80e-9)


def test_fig5_wigner_files(tmp_path):
    cfg = default_config("fig5")
    cfg["readout"]["mechanisms"] = ["ideal", "npdc"]
    cfg["quantum"].update(time_steps=30, wigner_points=31)
    run_experiment(cfg, tmp_path)
    header, rows = load(tmp_path / "fig5_wigner_npdc_e.csv")
    assert header == ["x", "p", "w"] and len(rows) == 31 * 31
    _, summary = load(tmp_path / "fig5_summary.csv")
    assert [r[:2] for r in summary] == [["ideal", "e"], ["ideal", "g"], ["npdc", "e"], ["npdc", "g"]]
    # ideal branches are mirror images
    assert float(summary[0][3]) == pytest.approx(-float(summary[1][3]))


def test_custom_trajectory_dump(tmp_path):
    cfg = default_config("custom")
    cfg["readout"].update(kappa_t_max=2.0, output_step_kappa=0.1)
    run_experiment(cfg, tmp_path)
    header, rows = load(tmp_path / "custom_trajectory.csv")
    assert header[0] == "t" and header[-1] == "sigma_z_mean"
    assert len(rows) == 21
    assert float(rows[0][5]) == 0.0


def test_failed_task_is_recorded(tmp_path):
    cfg = default_config("fig2")
    cfg["grid"]["flux_phi0"] = [0.2, 0.5]
    outcome = run_experiment(cfg, tmp_path)
    assert len(outcome.failed) == 1
    assert "DegenerateBias" in outcome.failed[0].error
    _, rows = load(tmp_path / "fig2_sensitivity.csv")
    assert len(rows) == 1
