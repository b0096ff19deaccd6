"""Gradiometric four-junction flux qubit in the two-dimensional charge basis.

Energies are angular frequencies (rad/s). Basis states are
``|n1, n2>`` with ``-cutoff <= n_i <= cutoff``, flattened row-major.
In this basis ``exp(i phi_j)`` raises ``n_j`` by one, so every cosine in
the potential is an exact banded hop.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
import scipy.linalg as sla
from scipy import constants as const

from .errors import CutoffTooSmall, DegeneracyError, NoConvergence

PHI0 = const.h / (2 * const.e)
HBAR = const.hbar
H_PLANCK = const.h

MIN_CUTOFF = 4
MAX_CUTOFF = 16


@dataclass(frozen=True)
class QubitSpec:
    """Circuit parameters of the gradiometric flux qubit.

    Parameters
    ----------
    main_josephson_energy : float
        ``E_J / hbar`` of the two large junctions, rad/s.
    charging_ratio : float
        ``E_J / E_C``.
    alpha_junction_scale : float
        Size ``alpha_0`` of the two alpha-loop junctions relative to the
        large ones.
    f_alpha, f_epsilon : float
        Reduced fluxes of the alpha loop and of the gradiometer imbalance.
    trapped_fluxoid_offset : int
        Fluxoid number ``n`` trapped in the gradiometer.
    """

    main_josephson_energy: float
    charging_ratio: float
    alpha_junction_scale: float
    f_alpha: float = 0.0
    f_epsilon: float = 0.0
    trapped_fluxoid_offset: int = 1

    def __post_init__(self) -> None:
        if self.main_josephson_energy <= 0 or self.charging_ratio <= 0:
            raise ValueError("E_J and E_J/E_C must be positive")
        if self.alpha_junction_scale < 0:
            raise ValueError("alpha_junction_scale must be non-negative")

    @property
    def charging_energy(self) -> float:
        return self.main_josephson_energy / self.charging_ratio

    @property
    def alpha_prime(self) -> float:
        """Effective gap parameter ``2 alpha_0 cos(pi f_alpha)``."""
        return 2 * self.alpha_junction_scale * np.cos(np.pi * self.f_alpha)

    @property
    def valid_double_well(self) -> bool:
        return 0.5 < self.alpha_prime < 1

    @property
    def critical_current(self) -> float:
        """Critical current of an alpha junction in amperes."""
        return 2 * np.pi * self.alpha_junction_scale * HBAR * self.main_josephson_energy / PHI0


@dataclass(frozen=True)
class QubitNoiseSpec:
    """Transverse noise power ``S_perp`` in seconds and 1/f amplitude ``A_alpha``."""

    transverse_noise_power: float = (5e-10) ** 2
    alpha_loop_flux_noise: float = 5e-6

    def __post_init__(self) -> None:
        if self.transverse_noise_power < 0 or self.alpha_loop_flux_noise < 0:
            raise ValueError("noise amplitudes must be non-negative")


@dataclass(frozen=True)
class QubitSolution:
    """Two lowest eigenpairs of the circuit and the derived currents."""

    spec: QubitSpec
    qubit_frequency: float
    energies: np.ndarray = field(repr=False)
    ground: np.ndarray = field(repr=False)
    excited: np.ndarray = field(repr=False)
    cutoff: int
    residual: float
    I_plus: float = np.nan
    I_minus: float = np.nan
    I_persistent: float = np.nan

    @property
    def I_persistent_loop(self) -> float:
        """Persistent current of the full main loop, twice ``I_persistent``."""
        return 2 * self.I_persistent


def _charges(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    ns = np.arange(-cutoff, cutoff + 1)
    n1, n2 = np.meshgrid(ns, ns, indexing="ij")
    return n1.ravel(), n2.ravel()


def _raise_op(cutoff: int, d1: int, d2: int) -> np.ndarray:
    """Dense matrix of ``exp(i (d1 phi_1 + d2 phi_2))`` for d_i in {0, 1}."""
    size = 2 * cutoff + 1
    n1, n2 = _charges(cutoff)
    src = np.flatnonzero((n1 + d1 <= cutoff) & (n2 + d2 <= cutoff))
    dst = src + d1 * size + d2
    op = np.zeros((size * size, size * size), dtype=complex)
    op[dst, src] = 1.0
    return op


def joint_hop(spec: QubitSpec, cutoff: int) -> np.ndarray:
    """``exp(i psi)`` with ``psi = phi_1 + phi_2 + pi (n + f_eps)``."""
    phase = np.exp(1j * np.pi * (spec.trapped_fluxoid_offset + spec.f_epsilon))
    return phase * _raise_op(cutoff, 1, 1)


def build_hamiltonian(spec: QubitSpec, cutoff: int = 10) -> np.ndarray:
    """Circuit Hamiltonian in rad/s, dimension ``(2 cutoff + 1)**2``.

    Raises
    ------
    CutoffTooSmall
        If ``cutoff < 4``.
    """
    if cutoff < MIN_CUTOFF:
        raise CutoffTooSmall(f"charge cutoff {cutoff} below {MIN_CUTOFF}")
    ej, ec, a0 = spec.main_josephson_energy, spec.charging_energy, spec.alpha_junction_scale
    n1, n2 = _charges(cutoff)
    kinetic = 4 * ec / (1 + 4 * a0) * ((1 + 2 * a0) * (n1**2 + n2**2) - 4 * a0 * n1 * n2)
    ham = np.diag(kinetic + ej * (2 + 2 * a0)).astype(complex)
    single = _raise_op(cutoff, 1, 0) + _raise_op(cutoff, 0, 1)
    joint = joint_hop(spec, cutoff)
    coupling = -ej / 2 * single - a0 * ej * np.cos(np.pi * spec.f_alpha) * joint
    return ham + coupling + coupling.conj().T


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    # largest-magnitude coefficient made real positive
    k = np.argmax(np.abs(vec))
    return vec * (abs(vec[k]) / vec[k])


def _lowest_pair(spec: QubitSpec, cutoff: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vals, vecs = sla.eigh(build_hamiltonian(spec, cutoff), subset_by_index=[0, 1], driver="evr")
    g, e = _fix_phase(vecs[:, 0]), _fix_phase(vecs[:, 1])
    return vals, g, e


def circulating_currents(
    spec: QubitSpec, ground: np.ndarray, excited: np.ndarray, cutoff: int
) -> tuple[float, float, float]:
    """Alpha-loop circulating currents and persistent current in amperes.

    Returns
    -------
    I_plus, I_minus : float
        Half-sum and half-difference of the diagonal elements of the
        alpha-loop current ``-I_c sin(pi f_alpha) cos(psi)``.
    I_p : float
        ``|<e|I_3|g>| = I_c cos(pi f_alpha) |<e|sin psi|g>|``, half the
        main-loop persistent current.
    """
    hop = joint_hop(spec, cutoff)
    cos_psi = (hop + hop.conj().T) / 2
    sin_psi = (hop - hop.conj().T) / 2j
    ic = spec.critical_current
    sa, ca = np.sin(np.pi * spec.f_alpha), np.cos(np.pi * spec.f_alpha)
    i_gg = -ic * sa * np.real(ground.conj() @ cos_psi @ ground)
    i_ee = -ic * sa * np.real(excited.conj() @ cos_psi @ excited)
    i_p = ic * abs(ca) * abs(excited.conj() @ sin_psi @ ground)
    # adding 0.0 turns -0.0 into +0.0
    return float((i_ee + i_gg) / 2) + 0.0, float((i_ee - i_gg) / 2) + 0.0, float(i_p)


def solve_two_levels(spec: QubitSpec, cutoff: int = 10, rtol: float = 1e-6) -> QubitSolution:
    """Two lowest eigenpairs with cutoff escalation.

    The cutoff grows in steps of two until the qubit frequency changes by
    less than ``rtol`` relative.

    Raises
    ------
    NoConvergence
        If the cutoff would exceed 16.
    """
    vals, g, e = _lowest_pair(spec, cutoff)
    while True:
        if cutoff + 2 > MAX_CUTOFF:
            raise NoConvergence(f"qubit frequency not converged at charge cutoff {cutoff}")
        vals2, g2, e2 = _lowest_pair(spec, cutoff + 2)
        wq, wq2 = vals[1] - vals[0], vals2[1] - vals2[0]
        residual = abs(wq2 - wq) / max(abs(wq2), 1e-300)
        if residual < rtol:
            break
        cutoff += 2
        vals, g, e = vals2, g2, e2
    i_plus, i_minus, i_p = circulating_currents(spec, g, e, cutoff)
    if not spec.valid_double_well:
        warnings.warn(f"alpha' = {spec.alpha_prime:.3f} outside (0.5, 1)", stacklevel=2)
    return QubitSolution(
        spec, float(max(wq, 0.0)), vals, g, e, cutoff, float(residual), i_plus, i_minus, i_p
    )


def thermodynamic_currents(
    spec: QubitSpec, cutoff: int = 10, step: float = 1e-4
) -> tuple[float, float]:
    """Currents from flux derivatives of the Hamiltonian.

    Returns
    -------
    I_minus : float
        ``-(hbar / 2 Phi_0) d omega_q / d f_alpha`` from a centered
        difference of the level splitting.
    I_p : float
        ``(hbar / Phi_0) |<e| dH/df_eps |g>|`` with the derivative of the
        Hamiltonian taken by centered difference.

    Raises
    ------
    DegeneracyError
        If the qubit frequency is below 2 pi x 1 MHz.
    """
    if not 1e-6 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-6, 1e-3]")
    vals, g, e = _lowest_pair(spec, cutoff)
    if vals[1] - vals[0] < 2 * np.pi * 1e6:
        raise DegeneracyError("qubit splitting below 1 MHz")

    def splitting(fa: float) -> float:
        v, _, _ = _lowest_pair(replace(spec, f_alpha=fa), cutoff)
        return v[1] - v[0]

    dw = (splitting(spec.f_alpha + step) - splitting(spec.f_alpha - step)) / (2 * step)
    dh = (
        build_hamiltonian(replace(spec, f_epsilon=spec.f_epsilon + step), cutoff)
        - build_hamiltonian(replace(spec, f_epsilon=spec.f_epsilon - step), cutoff)
    ) / (2 * step)
    i_minus = -HBAR * dw / (2 * PHI0)
    i_p = HBAR * abs(e.conj() @ dh @ g) / PHI0
    return float(i_minus) + 0.0, float(i_p)


@dataclass(frozen=True)
class QubitDecoherence:
    gamma_1: float
    gamma_f: float

    @property
    def t1(self) -> float:
        return np.inf if self.gamma_1 == 0 else 1 / self.gamma_1

    @property
    def t2(self) -> float:
        return np.inf if self.gamma_f == 0 else 1 / self.gamma_f


def qubit_decoherence(solution: QubitSolution, noise: QubitNoiseSpec) -> QubitDecoherence:
    """Relaxation and 1/f dephasing rates in 1/s.

    The coupling energies are converted to cyclic frequency with Planck's
    constant: ``Gamma_1 = (I_p Phi_0 / h)^2 S_perp`` and
    ``Gamma_f = A_alpha |I_minus| Phi_0 / h``.
    """
    g1 = (solution.I_persistent * PHI0 / H_PLANCK) ** 2 * noise.transverse_noise_power
    gf = noise.alpha_loop_flux_noise * abs(solution.I_minus) * PHI0 / H_PLANCK
    return QubitDecoherence(float(g1), float(gf))


@dataclass(frozen=True)
class QubitRow:
    f_alpha: float
    omega_q: float
    alpha_prime: float
    I_minus: float
    I_p: float
    t1: float
    t2: float
    valid_double_well: bool
    error: str = ""


def _sweep_point(template: QubitSpec, fa: float, noise: QubitNoiseSpec, cutoff: int) -> QubitRow:
    spec = replace(template, f_alpha=float(fa))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_two_levels(spec, cutoff)
    except NoConvergence as exc:
        nan = float("nan")
        return QubitRow(fa, nan, spec.alpha_prime, nan, nan, nan, nan, spec.valid_double_well, str(exc))
    dec = qubit_decoherence(sol, noise)
    return QubitRow(
        float(fa), sol.qubit_frequency, spec.alpha_prime, sol.I_minus, sol.I_persistent,
        dec.t1, dec.t2, spec.valid_double_well,
    )


def sweep_qubit(
    template: QubitSpec,
    f_alpha_grid: Iterable[float],
    noise: QubitNoiseSpec | None = None,
    cutoff: int = 10,
) -> list[QubitRow]:
    """Qubit frequency, currents and lifetimes over a grid of ``f_alpha``.

    Solver failures are recorded in the row's ``error`` field.
    """
    noise = noise or QubitNoiseSpec()
    grid = [float(f) for f in f_alpha_grid]
    if any(not -0.5 < f < 0.5 for f in grid):
        raise ValueError("f_alpha grid must lie within (-0.5, 0.5)")
    return [_sweep_point(template, f, noise, cutoff) for f in grid]


def reference_qubit(two_alpha0: float = 0.75, f_alpha: float = 0.0, ej_ghz: float = 320.0, ratio: float = 70.0) -> QubitSpec:
    """Qubit with the reference energies (E_J given as f/2pi in GHz)."""
    return QubitSpec(2 * np.pi * ej_ghz * 1e9, ratio, two_alpha0 / 2, f_alpha)
