"""SQUID-terminated quarter-wavelength resonator.

All frequencies are angular (rad/s). Formulas involving charge or flux
quanta are evaluated in SI units and converted to rad/s by dividing
energies by hbar.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import constants as const
from scipy.optimize import brentq

from .errors import DegenerateBias, LengthMismatch, NoConvergence

PHI0 = const.h / (2 * const.e)
HBAR = const.hbar
E_CHARGE = const.e


@dataclass(frozen=True)
class SquidSpec:
    """Two-junction SQUID terminating the resonator.

    Parameters
    ----------
    josephson_energy_per_junction : float
        Per-junction Josephson energy ``E_s0 / hbar`` in rad/s.
    junction_capacitance : float
        Junction capacitance ``C_s`` in farads.
    asymmetry : float
        Junction asymmetry ``d``, in ``[0, 1)``.
    """

    josephson_energy_per_junction: float
    junction_capacitance: float = 0.0
    asymmetry: float = 0.0

    def __post_init__(self) -> None:
        if not self.josephson_energy_per_junction > 0:
            raise ValueError("josephson_energy_per_junction must be positive")
        if self.junction_capacitance < 0:
            raise ValueError("junction_capacitance must be non-negative")
        if not 0 <= self.asymmetry < 1:
            raise ValueError("asymmetry must lie in [0, 1)")


@dataclass(frozen=True)
class ResonatorSpec:
    """Quarter-wavelength resonator with one or more terminating SQUIDs.

    ``total_capacitance`` is derived from ``bare_frequency`` and
    ``total_inductance`` when not given.
    """

    bare_frequency: float
    total_inductance: float
    escape_rate: float
    squids: tuple[SquidSpec, ...]
    total_capacitance: float | None = None

    def __post_init__(self) -> None:
        if self.bare_frequency <= 0 or self.total_inductance <= 0:
            raise ValueError("bare_frequency and total_inductance must be positive")
        if self.escape_rate <= 0:
            raise ValueError("escape_rate must be positive")
        object.__setattr__(self, "squids", tuple(self.squids))
        if not self.squids:
            raise ValueError("at least one SQUID is required")
        c_derived = (np.pi / 2) ** 2 / (self.bare_frequency**2 * self.total_inductance)
        if self.total_capacitance is None:
            object.__setattr__(self, "total_capacitance", c_derived)
        elif abs(self.total_capacitance / c_derived - 1) > 1e-9:
            raise ValueError("total_capacitance inconsistent with bare_frequency and total_inductance")

    def zero_point_phase(self, static_flux: float | Sequence[float] = 0.0) -> float:
        """Zero-point phase amplitude at the loaded frequency."""
        omega = solve_frequency(self, static_flux, method="linear")
        return 2 * np.pi / PHI0 * np.sqrt(HBAR / (2 * omega * self.total_capacitance))


@dataclass(frozen=True)
class FluxBias:
    """External flux split into static and small deviation parts (units of Phi_0)."""

    static_part: float
    deviation: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.deviation) > 1e-2:
            warnings.warn("flux deviation above 1e-2 Phi_0; first-order response may fail", stacklevel=2)

    def frequency(self, res: "ResonatorSpec") -> float:
        """Resonator frequency to first order in the deviation."""
        return solve_frequency(res, self.static_part) + flux_sensitivity(res, self.static_part) * self.deviation


@dataclass(frozen=True)
class BiasNoiseSpec:
    """1/f noise amplitudes of flux (Phi_0) and critical current (fraction of I_c)."""

    flux_noise_amplitude: float = 0.0
    current_noise_amplitude: float = 0.0
    infrared_cutoff: float = 2 * np.pi * 1.0

    def __post_init__(self) -> None:
        if min(self.flux_noise_amplitude, self.current_noise_amplitude, self.infrared_cutoff) < 0:
            raise ValueError("noise amplitudes must be non-negative")


def _q(squid: SquidSpec, literal_asymmetry: bool) -> float:
    d = squid.asymmetry
    return d if literal_asymmetry else d * d


def effective_josephson_energy(
    squid: SquidSpec, flux: float, literal_asymmetry: bool = False
) -> float:
    """Flux-tuned SQUID Josephson energy in rad/s.

    ``E = 2 E_s0 sqrt(cos^2(pi f) + d^2 sin^2(pi f))``. With
    ``literal_asymmetry`` the asymmetry enters unsquared.
    """
    c, s = np.cos(np.pi * flux), np.sin(np.pi * flux)
    val = c * c + _q(squid, literal_asymmetry) * s * s
    # cos(pi/2) is 6e-17 in floating point; treat it as an exact zero
    if abs(val) < 1e-28:
        val = 0.0
    return 2 * squid.josephson_energy_per_junction * np.sqrt(val)


def squid_inductance(squid: SquidSpec, flux: float, literal_asymmetry: bool = False) -> float:
    """Josephson inductance of the SQUID in henries.

    Raises
    ------
    DegenerateBias
        If the effective Josephson energy vanishes.
    """
    energy = effective_josephson_energy(squid, flux, literal_asymmetry)
    if energy <= 0:
        raise DegenerateBias(f"SQUID Josephson energy vanishes at flux {flux}")
    return (PHI0 / (2 * np.pi)) ** 2 / (HBAR * energy)


def _fluxes(res: ResonatorSpec, flux: float | Sequence[float]) -> np.ndarray:
    f = np.atleast_1d(np.asarray(flux, dtype=float))
    if f.size == 1 and len(res.squids) > 1:
        f = np.full(len(res.squids), f[0])
    if f.size != len(res.squids):
        raise LengthMismatch(f"{f.size} fluxes for {len(res.squids)} SQUIDs")
    return f


def _total_squid_inductance(res: ResonatorSpec, flux, literal_asymmetry: bool = False) -> float:
    return sum(
        squid_inductance(sq, f, literal_asymmetry) for sq, f in zip(res.squids, _fluxes(res, flux))
    )


def solve_frequency(
    res: ResonatorSpec,
    flux: float | Sequence[float],
    method: str = "linear",
    literal_asymmetry: bool = False,
) -> float:
    """Loaded fundamental frequency in rad/s.

    Parameters
    ----------
    res : ResonatorSpec
    flux : float or sequence of float
        Static flux per SQUID in units of Phi_0. A scalar is broadcast.
    method : {'linear', 'transcendental'}
        ``linear`` is the first-order shift ``omega_0 (1 - L_s/L_t)``;
        ``transcendental`` solves the boundary-condition equation
        including the junction capacitance.
    """
    ls = _total_squid_inductance(res, flux, literal_asymmetry)
    w0 = res.bare_frequency
    if method == "linear":
        return w0 * (1 - ls / res.total_inductance)
    if method != "transcendental":
        raise ValueError(f"unknown method {method!r}")
    if ls == 0:
        return w0
    # series combination of the SQUID capacitances
    caps = [sq.junction_capacitance for sq in res.squids]
    cs = 0.0 if min(caps) == 0 else 1 / sum(1 / c for c in caps)
    ratio = res.total_inductance / ls
    cap_ratio = 2 * cs / res.total_capacitance

    def g(theta: float) -> float:
        return theta * np.tan(theta) + cap_ratio * theta**2 - ratio

    # g increases monotonically on (0, pi/2) from -ratio to +inf
    lo = 1e-12
    gap = 0.5
    for _ in range(200):
        hi = np.pi / 2 - gap
        if g(hi) > 0:
            break
        gap *= 0.5
    else:
        raise NoConvergence("could not bracket the transcendental root")
    try:
        theta = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise NoConvergence(str(exc)) from exc
    return 2 * w0 * theta / np.pi


def _dlog_energy(squid: SquidSpec, flux: float, literal_asymmetry: bool) -> float:
    # d ln E / d f
    q = _q(squid, literal_asymmetry)
    c, s = np.cos(np.pi * flux), np.sin(np.pi * flux)
    return -np.pi * (1 - q) * s * c / (c * c + q * s * s)


def _single_sensitivity(res: ResonatorSpec, squid: SquidSpec, flux: float, literal_asymmetry: bool) -> float:
    ls = squid_inductance(squid, flux, literal_asymmetry)
    # L_s ~ 1/E so dL_s/df = -L_s dlnE/df
    return res.bare_frequency * ls * _dlog_energy(squid, flux, literal_asymmetry) / res.total_inductance


def flux_sensitivity(res: ResonatorSpec, static_flux: float, literal_asymmetry: bool = False) -> float:
    """Frequency sensitivity to flux, ``d omega_r / d f`` in rad/s per Phi_0.

    For a symmetric SQUID this is ``-pi omega_0 (L_s/L_t) tan(pi f)``. Uses
    the first SQUID of ``res``.
    """
    return _single_sensitivity(res, res.squids[0], static_flux, literal_asymmetry)


def kerr_strength(res: ResonatorSpec, static_flux: float | Sequence[float]) -> float:
    """Self-Kerr coefficient ``K_D`` in rad/s (negative).

    For several SQUIDs the single-SQUID contributions are summed, each
    evaluated with its own loaded frequency.
    """
    total = 0.0
    for sq, f in zip(res.squids, _fluxes(res, static_flux)):
        ls = squid_inductance(sq, f)
        w = res.bare_frequency * (1 - ls / res.total_inductance)
        lt = res.total_inductance
        energy = np.pi * E_CHARGE**2 * w**2 * lt / 8 * (np.pi * ls / (2 * lt)) ** 3
        total -= energy / HBAR
    return total


def critical_photon_number(
    res: ResonatorSpec, static_flux: float | Sequence[float], method: str = "linear"
) -> float:
    """Photon number where the quartic expansion of the SQUID potential fails.

    Returns ``inf`` when the boundary cosine vanishes.
    """
    w = solve_frequency(res, static_flux, method)
    c = np.cos(np.pi * w / (2 * res.bare_frequency))
    if abs(c) < 1e-15:
        return np.inf
    amp = PHI0 * np.sqrt(2 * w * res.total_capacitance / HBAR) / (4 * np.pi * c)
    return float(amp**2)


def dephasing_rates(
    res: ResonatorSpec, static_flux: float, noise: BiasNoiseSpec, rel_step: float = 1e-6
) -> tuple[float, float]:
    """Resonator dephasing rates from 1/f flux and critical-current noise.

    Returns
    -------
    gamma_flux, gamma_current : float
        Rates in 1/s (angular-frequency units).
    """
    g_flux = noise.flux_noise_amplitude * abs(flux_sensitivity(res, static_flux))

    def omega(scale: float) -> float:
        squids = tuple(
            SquidSpec(sq.josephson_energy_per_junction * scale, sq.junction_capacitance, sq.asymmetry)
            for sq in res.squids
        )
        scaled = ResonatorSpec(res.bare_frequency, res.total_inductance, res.escape_rate, squids)
        return solve_frequency(scaled, static_flux)

    # I_c d omega / d I_c via E_s0 proportional to I_c
    dlog = (omega(1 + rel_step) - omega(1 - rel_step)) / (2 * rel_step)
    g_current = noise.current_noise_amplitude * abs(dlog)
    return g_flux, g_current


@dataclass(frozen=True)
class MultiSquidSummary:
    loaded_frequency: float
    sensitivities: np.ndarray = field(repr=False)
    kerr: float


def multi_squid_summary(res: ResonatorSpec, fluxes: Sequence[float]) -> MultiSquidSummary:
    """Loaded frequency, per-SQUID sensitivities and total Kerr for a SQUID array."""
    f = np.asarray(fluxes, dtype=float)
    if f.ndim != 1 or f.size != len(res.squids):
        raise LengthMismatch(f"{f.size} fluxes for {len(res.squids)} SQUIDs")
    w = solve_frequency(res, f)
    sens = np.array([_single_sensitivity(res, sq, fj, False) for sq, fj in zip(res.squids, f)])
    return MultiSquidSummary(w, sens, kerr_strength(res, f))


def reference_resonator(
    n_squids: int = 1,
    bare_frequency_ghz: float = 6.0,
    total_inductance_nh: float = 10.0,
    squid_energy_thz: float = 2.5,
    kappa_mhz: float = 16.0,
    junction_capacitance: float = 0.0,
    asymmetry: float = 0.0,
) -> ResonatorSpec:
    """Resonator with the reference parameters (inputs given as f/2pi)."""
    sq = SquidSpec(2 * np.pi * squid_energy_thz * 1e12, junction_capacitance, asymmetry)
    return ResonatorSpec(
        2 * np.pi * bare_frequency_ghz * 1e9,
        total_inductance_nh * 1e-9,
        2 * np.pi * kappa_mhz * 1e6,
        (sq,) * n_squids,
    )
