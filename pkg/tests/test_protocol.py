import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import erfinv

from fluxqnd.errors import DriveBoundExceeded, Unreachable
from fluxqnd.protocol import (
    ProtocolQuery,
    SnrCurve,
    bistability_check,
    check_drive,
    drive_bounds,
    epsilon_max_idc,
    epsilon_stop_npdc,
    find_epsilon_min,
    fit_angle_law,
    golden_section_minimize,
    joint_pointer_states,
    optimize_homodyne_angle,
    required_time,
    steady_photon_roots,
    time_to_fidelity,
)
from fluxqnd.readout import ReadoutScenario, integrate_langevin

TARGET = 2 * erfinv(2 * 0.9999 - 1)


def oracle_snr(chi, eps, tau):
    """Linear-cavity SNR (kappa = 1) from the integrated pointer amplitudes."""
    def accum(s):
        r = 0.5 + 1j * chi * s
        return eps / r * (tau + np.expm1(-r * tau) / r)

    signal = 2 * np.real(np.exp(1j * np.pi / 2) * (accum(1) - accum(-1)))
    return signal / np.sqrt(2 * tau)


def test_ideal_required_time_matches_oracle():
    sc = ReadoutScenario("ideal", 0.5, 1.0, 0.5)
    oracle = brentq(lambda t: oracle_snr(0.5, 0.5, t) - TARGET, 1.0, 100.0, xtol=1e-12)
    assert required_time(sc) == pytest.approx(oracle, abs=1e-7)
    assert oracle == pytest.approx(17.604, abs=1e-3)


@given(st.floats(0.3, 3.0), st.floats(1.05, 2.0))
def test_required_time_decreases_with_drive(eps, factor):
    sc = ReadoutScenario("ideal", 0.5, 1.0, eps)
    strong = ReadoutScenario("ideal", 0.5, 1.0, eps * factor)
    assert required_time(strong) < required_time(sc)


def test_idc_bounds():
    sc = ReadoutScenario("idc", 0.5, 1.0, 1.0, kerr=-0.00625, lam=0.1, purcell_enabled=True)
    assert epsilon_max_idc(sc) == pytest.approx(1 / (2 * np.sqrt(2) * 0.1), rel=1e-14)
    eps_min = find_epsilon_min(sc)
    assert eps_min == pytest.approx(0.27664, abs=2e-4)
    below = ReadoutScenario("idc", 0.5, 1.0, eps_min * 0.99, kerr=-0.00625, lam=0.1, purcell_enabled=True)
    with pytest.raises(Unreachable):
        required_time(below, tau_max=500.0)
    bounds = drive_bounds(sc)
    assert bounds.epsilon_stop_npdc == np.inf
    assert bounds.epsilon_min == pytest.approx(eps_min)


def test_npdc_stop_point_and_drive_check():
    sc = ReadoutScenario("npdc", 0.5, 1.0, 1.0, kerr=-0.00625, critical_photons=100.0)
    stop = epsilon_stop_npdc(sc)
    # linear steady photon number reaches n_c at the stop drive
    assert (2 * stop) ** 2 * 0.5 == pytest.approx(100.0)
    check_drive(sc)
    with pytest.raises(DriveBoundExceeded):
        check_drive(ReadoutScenario("npdc", 0.5, 1.0, 1.01 * stop, critical_photons=100.0))


def test_time_to_fidelity_statuses():
    sc = ReadoutScenario("idc", 0.5, 1.0, 1.0, kerr=-0.00625, lam=0.1, purcell_enabled=True)
    rows = time_to_fidelity(ProtocolQuery(sc, (0.1, 1.0, 5.0)))
    assert [r.status for r in rows] == ["unreachable", "ok", "beyond_bound"]
    assert rows[1].reachable and np.isfinite(rows[1].tau)
    assert rows[0].tau == np.inf


def test_snr_curve_crossing_is_first():
    sc = ReadoutScenario("idc", 0.5, 1.0, 0.5, kerr=-0.00625, lam=0.1, purcell_enabled=True)
    curve = SnrCurve(sc, 100.0)
    t = curve.first_crossing(TARGET)
    assert curve(t) == pytest.approx(TARGET, abs=1e-7)
    assert np.all(curve(curve.grid[curve.grid < t - 1e-6]) < TARGET)


def test_golden_section_on_quadratic():
    x, fx = golden_section_minimize(lambda v: (v - 0.3) ** 2 + 1, -1.0, 2.0, tol=1e-8)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(1.0)


def test_optimal_angle_improves_time():
    sc = ReadoutScenario("npdc", 0.5, 1.0, 4.0, kerr=-0.00625)
    opt = optimize_homodyne_angle(sc, tau_max=100.0)
    assert opt.tau <= opt.tau_unshifted
    assert opt.delta_phi > 0
    curve = SnrCurve(sc, 100.0)
    for d in (opt.delta_phi - 0.02, opt.delta_phi + 0.02):
        assert curve.first_crossing(TARGET, d) >= opt.tau - 1e-9


def test_fit_angle_law_exact_line():
    x = np.linspace(0.0, 0.4, 9)
    a, b, r2 = fit_angle_law(x, 0.144 * x + 0.01)
    assert (a, b, r2) == pytest.approx((0.144, 0.01, 1.0))


def test_pointer_states_two_qubits():
    chi0, kappa = 0.3, 1.0
    states = joint_pointer_states([chi0, 2 * chi0], kappa, drive=0.5)
    pulls = sorted(s.pull / chi0 for s in states)
    assert pulls == pytest.approx([-3, -1, 1, 3])
    for s in states:
        assert s.angle == pytest.approx(np.arctan(s.pull / kappa), abs=1e-12)
        assert s.amplitude == pytest.approx(0.5 / (kappa / 2 + 1j * s.pull))


@pytest.mark.parametrize("eps", [0.5, 2.0, 4.0])
def test_steady_roots_match_long_time_photons(eps):
    sc = ReadoutScenario("npdc", 0.5, 1.0, eps, kerr=-0.00625)
    traj = integrate_langevin(sc, 80.0)
    for s, alpha in ((1, traj.alpha_e[-1]), (-1, traj.alpha_g[-1])):
        roots = steady_photon_roots(sc, s)
        assert np.min(np.abs(roots - abs(alpha) ** 2)) < 1e-6 * max(1, abs(alpha) ** 2)


def test_bistability_flag():
    safe = ReadoutScenario("npdc", 0.5, 1.0, 0.5, kerr=-0.00625)
    report = bistability_check(safe)
    assert report.status == "Safe"
    assert report.min_detuning == pytest.approx(-0.5)
    assert bistability_check(ReadoutScenario("npdc", 1.0, 1.0, 0.5, kerr=-0.00625)).status == "Bistable"
