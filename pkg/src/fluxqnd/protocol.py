"""Readout protocol analysis built on the semiclassical model.

Time to reach a target fidelity, drive bounds, the Kerr-compensating
homodyne angle, multi-qubit pointer states and the bistability check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DriveBoundExceeded, Unreachable
from .readout import (
    Mechanism,
    ReadoutScenario,
    Trajectory,
    integrate_langevin,
    required_snr,
    rotation_angle,
    snr_ideal,
)

GOLDEN = (np.sqrt(5) - 1) / 2
DEFAULT_KAPPA_TAU_MAX = 500.0


@dataclass(frozen=True)
class ProtocolQuery:
    """Time-to-fidelity sweep over drive amplitudes (rad/s)."""

    scenario: ReadoutScenario
    epsilon_grid: tuple[float, ...]
    target_fidelity: float = 0.9999
    tau_max: float | None = None

    def __post_init__(self) -> None:
        if not 0.5 < self.target_fidelity < 1:
            raise ValueError("target fidelity must lie in (0.5, 1)")
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))

    @property
    def horizon(self) -> float:
        if self.tau_max is not None:
            return self.tau_max
        return DEFAULT_KAPPA_TAU_MAX / self.scenario.kappa


@dataclass(frozen=True)
class DriveBounds:
    """Start and stop drive amplitudes in rad/s (``inf`` when unbounded)."""

    epsilon_min: float
    epsilon_max_idc: float
    epsilon_stop_npdc: float


@dataclass(frozen=True)
class TimeToFidelity:
    epsilon: float
    tau: float
    reachable: bool
    status: str = "ok"
    delta_phi: float = 0.0


def epsilon_max_idc(scenario: ReadoutScenario) -> float:
    """Largest IDC drive keeping the photon number below ``1/(4 lam^2)``."""
    if scenario.lam <= 0:
        return np.inf
    return scenario.kappa / (2 * np.sqrt(2) * scenario.lam)


def epsilon_stop_npdc(scenario: ReadoutScenario) -> float:
    """Drive at which the steady linear photon number reaches ``critical_photons``."""
    if scenario.critical_photons is None or not np.isfinite(scenario.critical_photons):
        return np.inf
    return scenario.kappa / 2 * np.sqrt(scenario.critical_photons) / np.cos(rotation_angle(scenario))


def check_drive(scenario: ReadoutScenario) -> None:
    """Refuse drives beyond the mechanism's validity bound.

    Raises
    ------
    DriveBoundExceeded
    """
    eps = scenario.drive_amplitude
    if scenario.mechanism is Mechanism.IDC and eps > epsilon_max_idc(scenario) * (1 + 1e-12):
        raise DriveBoundExceeded(f"IDC drive {eps / scenario.kappa:.4g} kappa beyond photon bound")
    if scenario.mechanism is Mechanism.NPDC and eps > epsilon_stop_npdc(scenario) * (1 + 1e-12):
        raise DriveBoundExceeded(f"NPDC drive {eps / scenario.kappa:.4g} kappa beyond critical photon number")


class SnrCurve:
    """SNR versus time for one scenario, on a grid and as a continuous function."""

    def __init__(self, scenario: ReadoutScenario, tau_max: float, trajectory: Trajectory | None = None):
        self.scenario = scenario
        if scenario.mechanism is Mechanism.IDEAL and trajectory is None:
            n = max(int(np.ceil(scenario.kappa * tau_max / 0.01)), 1)
            self.grid = np.linspace(0.0, tau_max, n + 1)
            self.trajectory = None
        else:
            self.trajectory = trajectory or integrate_langevin(scenario, tau_max)
            self.grid = self.trajectory.time_grid

    def __call__(self, t, delta_phi: float = 0.0) -> np.ndarray:
        if self.trajectory is None:
            sc = replace(self.scenario, homodyne_angle=self.scenario.homodyne_angle + delta_phi)
            return snr_ideal(sc, t)
        return self.trajectory.snr(t, delta_phi)

    def first_crossing(self, target_snr: float, delta_phi: float = 0.0) -> float:
        """Earliest time with SNR at or above ``target_snr``, ``inf`` if never."""
        values = self(self.grid, delta_phi)
        above = np.flatnonzero(values >= target_snr)
        if above.size == 0:
            return np.inf
        i = above[0]
        if i == 0:
            return 0.0

        def f(t: float) -> float:
            return float(self(np.array(t), delta_phi)) - target_snr

        return float(brentq(f, self.grid[i - 1], self.grid[i], xtol=1e-9 / self.scenario.kappa, rtol=1e-13))

    def max_snr(self, delta_phi: float = 0.0) -> float:
        return float(np.max(self(self.grid, delta_phi)))


def required_time(
    scenario: ReadoutScenario,
    target_fidelity: float = 0.9999,
    tau_max: float | None = None,
    delta_phi: float = 0.0,
) -> float:
    """Smallest integration time reaching ``target_fidelity``.

    The first crossing of the target is returned, so a non-monotone SNR
    (IDC with Purcell decay) is handled through its running maximum.

    Raises
    ------
    Unreachable
        If the SNR stays below target up to ``tau_max``.
    DriveBoundExceeded
        If the drive lies beyond the mechanism's validity bound.
    """
    check_drive(scenario)
    tau_max = tau_max if tau_max is not None else DEFAULT_KAPPA_TAU_MAX / scenario.kappa
    tau = SnrCurve(scenario, tau_max).first_crossing(required_snr(target_fidelity), delta_phi)
    if not np.isfinite(tau):
        raise Unreachable(f"fidelity {target_fidelity} not reached within kappa tau = {scenario.kappa * tau_max:g}")
    return tau


def time_to_fidelity(query: ProtocolQuery, optimize_angle: bool = False) -> list[TimeToFidelity]:
    """Required time for each drive amplitude of the query.

    Unreachable points and drives beyond the validity bound are reported
    with ``reachable = False`` instead of raising.
    """
    out = []
    for eps in query.epsilon_grid:
        sc = replace(query.scenario, drive_amplitude=eps)
        try:
            if optimize_angle:
                opt = optimize_homodyne_angle(sc, query.target_fidelity, query.horizon)
                out.append(TimeToFidelity(eps, opt.tau, True, "ok", opt.delta_phi))
            else:
                out.append(TimeToFidelity(eps, required_time(sc, query.target_fidelity, query.horizon), True))
        except Unreachable:
            out.append(TimeToFidelity(eps, np.inf, False, "unreachable", np.nan))
        except DriveBoundExceeded:
            out.append(TimeToFidelity(eps, np.nan, False, "beyond_bound", np.nan))
    return out


def find_epsilon_min(
    scenario: ReadoutScenario,
    target_fidelity: float = 0.9999,
    kappa_tau_max: float = DEFAULT_KAPPA_TAU_MAX,
    xtol: float = 1e-7,
) -> float:
    """Smallest drive whose peak SNR within ``kappa_tau_max`` reaches target.

    ``xtol`` is relative to kappa. Returns ``inf`` if no admissible drive
    reaches the target.
    """
    target = required_snr(target_fidelity)
    tau_max = kappa_tau_max / scenario.kappa
    eps_hi = min(epsilon_max_idc(scenario), epsilon_stop_npdc(scenario), 20 * scenario.kappa)

    def excess(eps: float) -> float:
        return SnrCurve(replace(scenario, drive_amplitude=eps), tau_max).max_snr() - target

    if excess(eps_hi) < 0:
        return np.inf
    return float(brentq(excess, 1e-9 * scenario.kappa, eps_hi, xtol=xtol * scenario.kappa, rtol=1e-12))


def drive_bounds(
    scenario: ReadoutScenario,
    target_fidelity: float = 0.9999,
    kappa_tau_max: float = DEFAULT_KAPPA_TAU_MAX,
    include_min: bool = True,
) -> DriveBounds:
    """Start point and stop points of the drive amplitude."""
    eps_min = find_epsilon_min(scenario, target_fidelity, kappa_tau_max) if include_min else np.nan
    return DriveBounds(eps_min, epsilon_max_idc(scenario), epsilon_stop_npdc(scenario))


def golden_section_minimize(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-5, max_iter: int = 200
) -> tuple[float, float]:
    """Minimize a unimodal function on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass(frozen=True)
class AngleOptimum:
    delta_phi: float
    tau: float
    tau_unshifted: float


def optimize_homodyne_angle(
    scenario: ReadoutScenario,
    target_fidelity: float = 0.9999,
    tau_max: float | None = None,
    bounds: tuple[float, float] = (-np.pi / 4, np.pi / 4),
    tol: float = 1e-5,
    n_scan: int = 33,
) -> AngleOptimum:
    """Homodyne-angle shift minimizing the time to reach target fidelity.

    A coarse scan brackets the optimum and golden-section search refines
    it. All angles share one trajectory.

    Raises
    ------
    Unreachable
        If no angle in ``bounds`` reaches the target.
    """
    check_drive(scenario)
    tau_max = tau_max if tau_max is not None else DEFAULT_KAPPA_TAU_MAX / scenario.kappa
    curve = SnrCurve(scenario, tau_max)
    target = required_snr(target_fidelity)

    def cost(dphi: float) -> float:
        return curve.first_crossing(target, dphi)

    scan = np.linspace(bounds[0], bounds[1], n_scan)
    values = np.array([cost(x) for x in scan])
    if not np.any(np.isfinite(values)):
        raise Unreachable("target fidelity unreachable at every homodyne angle")
    i = int(np.argmin(values))
    lo, hi = scan[max(i - 1, 0)], scan[min(i + 1, n_scan - 1)]
    x, fx = golden_section_minimize(cost, lo, hi, tol)
    if values[i] < fx:
        x, fx = scan[i], values[i]
    return AngleOptimum(float(x), float(fx), cost(0.0))


def fit_angle_law(delta_phi: Sequence[float], epsilon_over_kappa: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares fit ``eps/kappa = a delta_phi + b``; returns ``(a, b, R^2)``."""
    x = np.asarray(delta_phi, dtype=float)
    y = np.asarray(epsilon_over_kappa, dtype=float)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    r2 = 1 - np.sum(resid**2) / np.sum((y - y.mean()) ** 2)
    return float(a), float(b), float(r2)


@dataclass(frozen=True)
class PointerState:
    configuration: tuple[int, ...]
    pull: float
    angle: float
    amplitude: complex


def joint_pointer_states(
    chis: Sequence[float], kappa: float, drive: float = 0.0, drive_phase: float = 0.0
) -> list[PointerState]:
    """Pointer states of several qubits dispersively coupled to one cavity.

    Each polarization configuration ``sigma`` gives a summed pull
    ``sum_j chi_j sigma_j``, a pointer angle ``arctan(pull / kappa)`` and
    the steady amplitude ``eps e^{i theta_d} / (kappa/2 + i pull)``.
    """
    states = []
    for config in itertools.product((1, -1), repeat=len(chis)):
        pull = float(np.dot(chis, config))
        amp = drive * np.exp(1j * drive_phase) / (kappa / 2 + 1j * pull)
        states.append(PointerState(config, pull, float(np.arctan(pull / kappa)), complex(amp)))
    return states


@dataclass(frozen=True)
class BistabilityReport:
    status: str
    min_detuning: float
    positive_roots: tuple[int, int]


def steady_photon_roots(scenario: ReadoutScenario, sigma_z: int) -> np.ndarray:
    """Real positive roots of ``n [(kappa/2)^2 + (chi s + 2 K n)^2] = eps^2``."""
    k, chi, kerr, eps = scenario.kappa, scenario.chi_z * sigma_z, scenario.kerr, scenario.drive_amplitude
    if scenario.mechanism is Mechanism.IDC:
        kerr = kerr * sigma_z
    scale = k * k
    coeffs = [4 * kerr**2, 4 * kerr * chi, k * k / 4 + chi * chi, -eps * eps]
    coeffs = np.array(coeffs) / scale
    while coeffs.size > 1 and coeffs[0] == 0:
        coeffs = coeffs[1:]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1, np.abs(roots))].real
    return np.sort(real[real > 0])


def bistability_check(scenario: ReadoutScenario) -> BistabilityReport:
    """Flag detunings beyond the Kerr bistability threshold ``-sqrt(3)/2``."""
    ratio = abs(scenario.chi_z / scenario.kappa)
    status = "Bistable" if -ratio < -np.sqrt(3) / 2 else "Safe"
    roots = (steady_photon_roots(scenario, 1).size, steady_photon_roots(scenario, -1).size)
    return BistabilityReport(status, -ratio, roots)
