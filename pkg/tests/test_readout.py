import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erf

from fluxqnd.errors import PhotonOverflow, StepSizeTooLarge, UnsupportedNoise
from fluxqnd.readout import (
    Mechanism,
    ReadoutScenario,
    cavity_pull,
    default_step,
    figure4_scenario,
    fidelity_from_snr,
    homodyne_record,
    ideal_cavity_amplitude,
    integrate_langevin,
    intracavity_photons,
    polarization,
    required_snr,
    rotation_angle,
    separation_signal,
    snr_ideal,
    trajectory_rows,
)


def oracle_accumulated(eps, theta_d, chi, s, t):
    """kappa int_0^t alpha dt' for the linear cavity with kappa = 1."""
    r = 0.5 + 1j * chi * s
    d = eps * np.exp(1j * theta_d)
    return d / r * (t + np.expm1(-r * t) / r)


def oracle_signal(eps, theta_d, phi_h, chi, t):
    diff = oracle_accumulated(eps, theta_d, chi, 1, t) - oracle_accumulated(eps, theta_d, chi, -1, t)
    return 2 * np.real(np.exp(-1j * phi_h) * diff)


@given(st.floats(0.05, 2.0), st.floats(0.05, 3.0), st.floats(0.0, 10.0))
def test_closed_form_signal_matches_oracle(chi, eps, tau):
    sc = ReadoutScenario("ideal", chi, 1.0, eps)
    assert separation_signal(sc, tau) == pytest.approx(oracle_signal(eps, 0.0, -np.pi / 2, chi, tau), abs=1e-9)


@given(st.floats(0.05, 2.0), st.floats(0.05, 3.0), st.floats(0.0, 10.0), st.sampled_from([1, -1]))
def test_photon_number_formula(chi, eps, t, s):
    sc = ReadoutScenario("ideal", chi, 1.0, eps)
    direct = abs(ideal_cavity_amplitude(sc, s, t)) ** 2
    assert intracavity_photons(sc, s, t) == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_steady_photons_half_for_chi_equal_half_kappa():
    sc = ReadoutScenario("ideal", 0.5, 1.0, 0.5)
    assert intracavity_photons(sc, 1, 60.0) == pytest.approx(0.5, rel=1e-12)


def test_langevin_matches_closed_forms_random_draws():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        chi, eps, theta = rng.uniform(0.1, 1.5), rng.uniform(0.1, 2.0), rng.uniform(-np.pi, np.pi)
        sc = ReadoutScenario("ideal", chi, 1.0, eps, drive_phase=theta, homodyne_angle=theta - np.pi / 2)
        traj = integrate_langevin(sc, 10.0)
        t = traj.time_grid
        worst = max(worst, np.max(np.abs(traj.alpha_e - ideal_cavity_amplitude(sc, 1, t))))
        worst = max(worst, np.max(np.abs(traj.signal(t) - separation_signal(sc, t))))
    assert worst < 1e-8


def test_snr_and_fidelity_conventions():
    assert required_snr(0.9999) == pytest.approx(5.2595, abs=1e-4)
    assert fidelity_from_snr(required_snr(0.9999)) == pytest.approx(0.9999, abs=1e-12)
    assert fidelity_from_snr(2.0) == pytest.approx(0.5 * (1 + erf(1.0)))
    sc = ReadoutScenario("ideal", 0.5, 1.0, 0.5)
    assert snr_ideal(sc, 10.0) == pytest.approx(3.5794, abs=1e-4)
    assert snr_ideal(sc, 0.0) == 0.0
    with pytest.raises(ValueError):
        required_snr(0.4)


def test_homodyne_record():
    sc = ReadoutScenario("ideal", 0.5, 1.0, 0.5)
    traj = integrate_langevin(sc, 5.0)
    rec = homodyne_record(traj, sc, 5.0)
    assert rec.noise == pytest.approx(np.sqrt(10.0))
    assert rec.snr == pytest.approx(float(snr_ideal(sc, 5.0)), abs=1e-9)
    with pytest.raises(ValueError):
        homodyne_record(traj, sc, 6.0)


def test_resample_matches_direct_grid():
    sc = figure4_scenario("npdc", 1.0)
    traj = integrate_langevin(sc, 5 / sc.kappa)
    times = np.linspace(0, 5 / sc.kappa, 11)
    sub = traj.resample(times)
    fine = integrate_langevin(sc, 5 / sc.kappa, dt=0.5 / sc.kappa / 100)
    idx = np.searchsorted(fine.time_grid, times)
    assert np.allclose(sub.alpha_e, fine.alpha_e[idx], atol=1e-9)
    assert len(trajectory_rows(sub)) == 11


def test_step_size_guard():
    sc = ReadoutScenario("ideal", 0.5, 1.0, 0.5)
    with pytest.raises(StepSizeTooLarge):
        integrate_langevin(sc, 1.0, dt=10 * default_step(sc))


def test_photon_overflow():
    sc = ReadoutScenario("npdc", 0.5, 1.0, 5.0, kerr=-1e-4, critical_photons=1.0)
    with pytest.raises(PhotonOverflow):
        integrate_langevin(sc, 5.0)


def test_purcell_polarization():
    sc = figure4_scenario("idc", 1.0)
    t = np.linspace(0, 10 / sc.kappa, 5)
    pol = polarization(sc, 1, t)
    assert pol[0] == 1.0
    assert pol[-1] == pytest.approx(2 * np.exp(-0.01 * 10) - 1)
    assert np.all(polarization(sc, -1, t) == -1)


def test_idc_has_interior_maximum_and_npdc_grows():
    idc = figure4_scenario("idc", 0.5)
    traj = integrate_langevin(idc, 150 / idc.kappa)
    snr = traj.snr(traj.time_grid)
    i = int(np.argmax(snr))
    assert 0 < i < len(snr) - 1
    npdc = figure4_scenario("npdc", 0.5)
    tr = integrate_langevin(npdc, 150 / npdc.kappa)
    assert np.all(np.diff(tr.snr(tr.time_grid)[tr.time_grid * npdc.kappa > 5]) > 0)


def test_cavity_pull():
    idc = figure4_scenario("idc")
    xi_g, xi_e = cavity_pull(idc, 0.0)
    assert (xi_g, xi_e) == (-idc.chi_z, idc.chi_z)
    npdc = figure4_scenario("npdc")
    g, e = cavity_pull(npdc, 10.0)
    assert e - g == pytest.approx(2 * npdc.chi_z)
    assert rotation_angle(ReadoutScenario("ideal", 0.5, 1.0, 1.0)) == pytest.approx(np.pi / 4)


def test_scenario_validation():
    with pytest.raises(ValueError):
        ReadoutScenario("idc", 1.0, 1.0, 1.0, lam=0.0)
    with pytest.raises(ValueError):
        ReadoutScenario("ideal", 1.0, 1.0, 1.0, kerr=0.1)
    with pytest.raises(ValueError):
        ReadoutScenario("npdc", 1.0, 1.0, 1.0, purcell_enabled=True)
    with pytest.raises(UnsupportedNoise):
        ReadoutScenario("npdc", 1.0, 1.0, 1.0, input_noise="thermal")
    assert ReadoutScenario("npdc", 1.0, 1.0, 1.0).mechanism is Mechanism.NPDC
