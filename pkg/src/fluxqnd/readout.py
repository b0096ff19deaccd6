"""Semiclassical dispersive readout of the cavity pointer states.

The cavity amplitude obeys

    d alpha/dt = -i chi s alpha - 2 i K <N> alpha - (kappa/2) alpha + eps e^{i theta_d}

with ``s`` the qubit polarization of the branch and ``<N>`` equal to
``s |alpha|^2`` (induced coupling, IDC) or ``|alpha|^2`` (direct coupling,
NPDC). The homodyne record integrates the output field
``alpha_out = sqrt(kappa) alpha - eps e^{i theta_d} / sqrt(kappa)`` with a
boxcar weight. Noise is that of the vacuum input, ``M_N^2 = 2 kappa tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import erf, erfinv

from .errors import PhotonOverflow, StepSizeTooLarge, UnsupportedNoise


class Mechanism(str, Enum):
    IDEAL = "ideal"
    IDC = "idc"
    NPDC = "npdc"


@dataclass(frozen=True)
class ReadoutScenario:
    """Readout parameters. Rates and frequencies are angular (rad/s).

    Parameters
    ----------
    mechanism : Mechanism or str
        ``ideal``, ``idc`` or ``npdc``.
    chi_z : float
        Dispersive shift per qubit polarization.
    kappa : float
        Cavity energy decay rate.
    drive_amplitude : float
        Drive strength ``eps``.
    kerr : float
        Signed self-Kerr coefficient ``K``.
    drive_phase, homodyne_angle : float
        ``theta_d`` and ``phi_h``. The default pair has
        ``theta_d - phi_h = pi/2``, the informative quadrature.
    lam : float
        Dispersive ratio ``g/Delta`` of the induced coupling; sets the
        Purcell rate ``lam^2 kappa``.
    purcell_enabled : bool
        Whether the excited IDC branch relaxes at the Purcell rate.
    sigma_z_initial : int
        Initial polarization used by single-branch helpers.
    critical_photons : float, optional
        Photon number bound; the integrator raises when ``|alpha|^2``
        exceeds ten times this value.
    input_noise : str
        Only ``vacuum`` is supported.
    """

    mechanism: Mechanism
    chi_z: float
    kappa: float
    drive_amplitude: float
    kerr: float = 0.0
    drive_phase: float = 0.0
    homodyne_angle: float = -np.pi / 2
    lam: float = 0.0
    purcell_enabled: bool = False
    sigma_z_initial: int = 1
    critical_photons: float | None = None
    input_noise: str = "vacuum"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.drive_amplitude < 0:
            raise ValueError("drive amplitude must be non-negative")
        if self.sigma_z_initial not in (1, -1):
            raise ValueError("sigma_z_initial must be +1 or -1")
        if self.input_noise != "vacuum":
            raise UnsupportedNoise(f"input noise {self.input_noise!r} not supported")
        if self.mechanism is Mechanism.IDC and not 0 < self.lam <= 0.3:
            raise ValueError("IDC requires 0 < lam <= 0.3")
        if self.mechanism is Mechanism.IDEAL and (self.kerr != 0 or self.purcell_enabled):
            raise ValueError("ideal readout has no Kerr term and no Purcell decay")
        if self.purcell_enabled and self.mechanism is not Mechanism.IDC:
            raise ValueError("Purcell decay applies to IDC only")

    @property
    def purcell_rate(self) -> float:
        return purcell_rate(self.lam, self.kappa) if self.purcell_enabled else 0.0


@dataclass(frozen=True)
class MeasurementRecord:
    tau: float
    signal_separation: float
    noise: float
    snr: float
    fidelity: float


def rotation_angle(scenario: ReadoutScenario) -> float:
    """Pointer rotation angle ``theta_q = arctan(2 chi / kappa)``."""
    return float(np.arctan(2 * scenario.chi_z / scenario.kappa))


def ideal_cavity_amplitude(scenario: ReadoutScenario, sigma_z: int, t) -> np.ndarray:
    """Closed-form amplitude of the linear cavity (Kerr and Purcell ignored).

    ``alpha(t) = eps e^{i theta_d} (1 - e^{-(kappa/2 + i chi s) t}) / (kappa/2 + i chi s)``
    """
    rate = scenario.kappa / 2 + 1j * scenario.chi_z * sigma_z
    t = np.asarray(t, dtype=float)
    drive = scenario.drive_amplitude * np.exp(1j * scenario.drive_phase)
    return drive * -np.expm1(-rate * t) / rate


def intracavity_photons(scenario: ReadoutScenario, sigma_z: int, t) -> np.ndarray:
    """Photon number of the linear cavity.

    ``n(t) = (2 eps/kappa)^2 cos^2(theta_q) [1 + e^{-kappa t} - 2 e^{-kappa t/2} cos(chi t)]``
    """
    t = np.asarray(t, dtype=float)
    k, chi = scenario.kappa, scenario.chi_z
    steady = (2 * scenario.drive_amplitude / k) ** 2 * np.cos(rotation_angle(scenario)) ** 2
    return steady * (1 + np.exp(-k * t) - 2 * np.exp(-k * t / 2) * np.cos(chi * sigma_z * t))


def separation_signal(scenario: ReadoutScenario, tau) -> np.ndarray:
    """Closed-form signal separation of the linear cavity."""
    tau = np.asarray(tau, dtype=float)
    k, chi, eps = scenario.kappa, scenario.chi_z, scenario.drive_amplitude
    tq = rotation_angle(scenario)
    angle = np.sin(scenario.drive_phase - scenario.homodyne_angle)
    if np.sin(2 * tq) == 0:
        return np.zeros_like(tau)
    ring = np.sin(chi * tau + 2 * tq) / np.sin(2 * tq) * np.exp(-k * tau / 2)
    return 4 * eps * np.sin(2 * tq) * angle * (tau - 4 * np.cos(tq) ** 2 / k * (1 - ring))


def snr_ideal(scenario: ReadoutScenario, tau) -> np.ndarray:
    """Closed-form SNR of the linear cavity, zero at ``tau = 0``."""
    tau = np.asarray(tau, dtype=float)
    noise = np.sqrt(2 * scenario.kappa * tau)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(tau > 0, separation_signal(scenario, tau) / noise, 0.0)
    return out


def fidelity_from_snr(snr) -> np.ndarray:
    """Assignment fidelity ``[1 + erf(R/2)] / 2``."""
    return 0.5 * (1 + erf(np.asarray(snr) / 2))


def required_snr(target_fidelity: float) -> float:
    """SNR needed to reach ``target_fidelity``."""
    if not 0.5 < target_fidelity < 1:
        raise ValueError("target fidelity must lie in (0.5, 1)")
    return float(2 * erfinv(2 * target_fidelity - 1))


def noise_and_snr(scenario: ReadoutScenario, tau: float, signal: float) -> MeasurementRecord:
    """Vacuum noise, SNR and fidelity for a given signal separation."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    noise = float(np.sqrt(2 * scenario.kappa * tau))
    snr = signal / noise
    return MeasurementRecord(tau, float(signal), noise, float(snr), float(fidelity_from_snr(snr)))


def purcell_rate(lam: float, kappa: float) -> float:
    """Purcell relaxation rate ``lam^2 kappa``."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return lam * lam * kappa


def polarization(scenario: ReadoutScenario, sigma0: int, t) -> np.ndarray:
    """Mean qubit polarization of a branch starting at ``sigma0``."""
    t = np.asarray(t, dtype=float)
    gamma = scenario.purcell_rate
    return (sigma0 + 1) * np.exp(-gamma * t) - 1.0


def cavity_pull(scenario: ReadoutScenario, photon_number: float) -> tuple[float, float]:
    """Effective cavity pulls ``(xi_g, xi_e)`` at a given photon number."""
    if photon_number < 0:
        raise ValueError("photon number must be non-negative")
    chi = scenario.chi_z
    if scenario.mechanism is Mechanism.IDC:
        n_c = 1 / (4 * scenario.lam**2)
        red = 1 - photon_number / (2 * n_c)
        return -chi * red, chi * red
    shift = 2 * scenario.kerr * photon_number
    return -chi + shift, chi + shift


@dataclass(frozen=True)
class Trajectory:
    """Both qubit branches of the semiclassical cavity evolution.

    ``accum_e`` and ``accum_g`` hold ``kappa * int_0^t alpha dt'`` and
    feed the homodyne integrals.
    """

    scenario: ReadoutScenario
    time_grid: np.ndarray
    alpha_e: np.ndarray
    alpha_g: np.ndarray
    sigma_z_mean: np.ndarray
    accum_e: np.ndarray
    accum_g: np.ndarray
    dense: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    @property
    def photon_number_e(self) -> np.ndarray:
        return np.abs(self.alpha_e) ** 2

    @property
    def photon_number_g(self) -> np.ndarray:
        return np.abs(self.alpha_g) ** 2

    @property
    def horizon(self) -> float:
        return float(self.time_grid[-1])

    def accumulated_difference(self, t) -> np.ndarray:
        """``kappa int_0^t (alpha_e - alpha_g) dt'`` at arbitrary times."""
        t = np.asarray(t, dtype=float)
        y = self.dense(np.atleast_1d(t) * self.scenario.kappa)
        out = (y[4] - y[6]) + 1j * (y[5] - y[7])
        return out.reshape(t.shape)

    def signal(self, t, delta_phi_h: float = 0.0) -> np.ndarray:
        """Signal separation ``M_e - M_g`` at times ``t``."""
        phi = self.scenario.homodyne_angle + delta_phi_h
        return 2 * np.real(np.exp(-1j * phi) * self.accumulated_difference(t))

    def resample(self, times) -> "Trajectory":
        """Same trajectory evaluated on another time grid within the horizon."""
        times = np.asarray(times, dtype=float)
        if times.size and times[-1] > self.horizon * (1 + 1e-12):
            raise ValueError("resampling grid beyond trajectory horizon")
        y = self.dense(times * self.scenario.kappa)
        return Trajectory(
            self.scenario, times, y[0] + 1j * y[1], y[2] + 1j * y[3],
            polarization(self.scenario, 1, times), y[4] + 1j * y[5], y[6] + 1j * y[7], self.dense,
        )

    def snr(self, t, delta_phi_h: float = 0.0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        noise = np.sqrt(2 * self.scenario.kappa * t)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(t > 0, self.signal(t, delta_phi_h) / noise, 0.0)


def _max_rate(scenario: ReadoutScenario) -> float:
    n_est = (2 * scenario.drive_amplitude / scenario.kappa) ** 2 * np.cos(rotation_angle(scenario)) ** 2
    return max(scenario.kappa, abs(scenario.chi_z), abs(scenario.kerr) * n_est)


def default_step(scenario: ReadoutScenario) -> float:
    """Largest admissible output spacing."""
    return 0.01 / _max_rate(scenario)


def integrate_langevin(
    scenario: ReadoutScenario,
    t_max: float,
    dt: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> Trajectory:
    """Integrate both branches of the nonlinear Langevin equation.

    Integration runs in units of ``kappa t`` with an explicit embedded
    Runge-Kutta pair (Dormand-Prince 8(5,3)); output is sampled on a
    uniform grid and the dense interpolant is kept for off-grid queries.

    Raises
    ------
    StepSizeTooLarge
        If ``dt`` exceeds ``0.01 / max(kappa, chi, |K| n)`` or the
        integrator fails to meet its tolerance.
    PhotonOverflow
        If a photon number exceeds ten times ``critical_photons``.
    """
    if dt is None:
        dt = default_step(scenario)
    if dt > default_step(scenario) * (1 + 1e-12):
        raise StepSizeTooLarge(f"output step {dt:.3e} s above {default_step(scenario):.3e} s")
    k = scenario.kappa
    chi = scenario.chi_z / k
    kerr = scenario.kerr / k
    gamma = scenario.purcell_rate / k
    drive = scenario.drive_amplitude / k * np.exp(1j * scenario.drive_phase)
    idc = scenario.mechanism is Mechanism.IDC

    def rhs(u: float, y: np.ndarray) -> np.ndarray:
        ae = y[0] + 1j * y[1]
        ag = y[2] + 1j * y[3]
        se = 2 * np.exp(-gamma * u) - 1 if gamma else 1.0
        ne = abs(ae) ** 2 * (se if idc else 1.0)
        ng = abs(ag) ** 2 * (-1.0 if idc else 1.0)
        dae = -1j * chi * se * ae - 2j * kerr * ne * ae - 0.5 * ae + drive
        dag = 1j * chi * ag - 2j * kerr * ng * ag - 0.5 * ag + drive
        return np.array([dae.real, dae.imag, dag.real, dag.imag, ae.real, ae.imag, ag.real, ag.imag])

    n_steps = max(int(np.ceil(t_max / dt - 1e-9)), 1)
    grid = np.linspace(0.0, t_max, n_steps + 1)
    u_grid = grid * k
    sol = solve_ivp(
        rhs, (0.0, u_grid[-1]), np.zeros(8), method="DOP853", t_eval=u_grid,
        dense_output=True, rtol=rtol, atol=atol,
    )
    if sol.status != 0:
        raise StepSizeTooLarge(f"integrator failed: {sol.message}")
    y = sol.y
    alpha_e = y[0] + 1j * y[1]
    alpha_g = y[2] + 1j * y[3]
    if scenario.critical_photons is not None:
        peak = max(np.max(np.abs(alpha_e) ** 2), np.max(np.abs(alpha_g) ** 2))
        if peak > 10 * scenario.critical_photons:
            raise PhotonOverflow(f"photon number {peak:.3g} beyond 10 n_c")
    return Trajectory(
        scenario, grid, alpha_e, alpha_g, polarization(scenario, 1, grid),
        y[4] + 1j * y[5], y[6] + 1j * y[7], sol.sol,
    )


def homodyne_record(
    trajectory: Trajectory, scenario: ReadoutScenario, tau: float, delta_phi_h: float = 0.0
) -> MeasurementRecord:
    """Boxcar-integrated homodyne record of both branches at time ``tau``."""
    if tau > trajectory.horizon * (1 + 1e-12):
        raise ValueError("tau beyond trajectory horizon")
    phi = scenario.homodyne_angle + delta_phi_h
    signal = float(2 * np.real(np.exp(-1j * phi) * trajectory.accumulated_difference(tau)))
    return noise_and_snr(scenario, tau, signal)


def trajectory_rows(trajectory: Trajectory) -> list[tuple]:
    """Rows ``t, re/im alpha_e, re/im alpha_g, n_e, n_g, sigma_z_mean``."""
    return [
        (t, ae.real, ae.imag, ag.real, ag.imag, abs(ae) ** 2, abs(ag) ** 2, s)
        for t, ae, ag, s in zip(
            trajectory.time_grid, trajectory.alpha_e, trajectory.alpha_g, trajectory.sigma_z_mean
        )
    ]


def figure4_scenario(
    mechanism: Mechanism | str,
    epsilon_over_kappa: float = 0.5,
    kappa_mhz: float = 16.0,
    chi_mhz: float = 8.0,
    kerr_khz: float = -100.0,
    lam: float = 0.1,
    purcell: bool = True,
) -> ReadoutScenario:
    """Reference readout parameters (inputs as f/2pi)."""
    mech = Mechanism(mechanism)
    k = 2 * np.pi * kappa_mhz * 1e6
    return ReadoutScenario(
        mech,
        chi_z=2 * np.pi * chi_mhz * 1e6,
        kappa=k,
        drive_amplitude=epsilon_over_kappa * k,
        kerr=0.0 if mech is Mechanism.IDEAL else 2 * np.pi * kerr_khz * 1e3,
        lam=lam if mech is Mechanism.IDC else 0.0,
        purcell_enabled=purcell and mech is Mechanism.IDC,
    )
