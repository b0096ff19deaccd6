"""Truncated-Fock Lindblad verification of the readout model.

Density matrices are vectorized row-major, so that
``vec(A rho B) = kron(A, B.T) vec(rho)``. Evolution uses the exact
propagator ``expm(L dt)`` of the time-independent generator, which is
deterministic and free of step-size error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import trapezoid

from .errors import CutoffTooSmall, GridTooCoarse, TruncationBreach
from .readout import Mechanism, ReadoutScenario, rotation_angle

MIN_FOCK = 8
BOUNDARY_TOL = 1e-4


def destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # basis (|e>, |g>)


def liouvillian(ham: np.ndarray, collapse: list[np.ndarray]) -> np.ndarray:
    """Dense Lindblad superoperator in the row-major vectorization."""
    d = ham.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(ham, eye) - np.kron(eye, ham.T))
    for c in collapse:
        cdc = c.conj().T @ c
        out += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
    return out


@dataclass(frozen=True)
class Generator:
    """Lindblad generator plus the cavity operators of its Hilbert space."""

    matrix: np.ndarray = field(repr=False)
    hamiltonian: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    n_fock: int
    include_qubit: bool

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass
class DensityState:
    """Cavity (optionally qubit x cavity) density matrix at a given time.

    With a qubit the ordering is ``kron(qubit, cavity)`` and the qubit
    basis is ``(|e>, |g>)``.
    """

    n_fock: int
    include_qubit: bool
    matrix: np.ndarray = field(repr=False)
    time: float = 0.0

    def cavity(self) -> np.ndarray:
        """Reduced cavity density matrix."""
        if not self.include_qubit:
            return self.matrix
        r = self.matrix.reshape(2, self.n_fock, 2, self.n_fock)
        return np.einsum("iaib->ab", r)

    def boundary_population(self) -> float:
        return float(np.real(self.cavity()[-1, -1]))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def check(self, trace_tol: float = 1e-9, herm_tol: float = 1e-10, eig_floor: float = -1e-8) -> None:
        """Raise ``ValueError`` if the density-matrix invariants fail."""
        m = self.matrix
        if abs(np.trace(m) - 1) > trace_tol:
            raise ValueError(f"trace {np.trace(m)} differs from 1")
        if np.max(np.abs(m - m.conj().T)) > herm_tol:
            raise ValueError("density matrix not Hermitian")
        if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < eig_floor:
            raise ValueError("density matrix not positive")


def vacuum_state(n_fock: int, qubit: str | None = None) -> DensityState:
    """Empty cavity, optionally with the qubit in ``'e'`` or ``'g'``."""
    psi = np.zeros(n_fock, dtype=complex)
    psi[0] = 1
    if qubit is not None:
        psi = np.kron(np.array([1, 0] if qubit == "e" else [0, 1], dtype=complex), psi)
    return DensityState(n_fock, qubit is not None, np.outer(psi, psi.conj()))


def build_generator(scenario: ReadoutScenario, sigma_z_or_qubit: int | str, n_fock: int) -> Generator:
    """Lindblad generator in the frame rotating at the loaded cavity frequency.

    Parameters
    ----------
    scenario : ReadoutScenario
    sigma_z_or_qubit : {+1, -1, 'qubit'}
        Fixed qubit polarization, or ``'qubit'`` to include the qubit as a
        two-level system (needed for Purcell decay).
    n_fock : int
        Fock-space cutoff.

    Notes
    -----
    ``H = chi sigma_z n + K a^dag a^dag a a [sigma_z for IDC]
    + i eps (a^dag e^{i theta_d} - a e^{-i theta_d})``. The drive phase
    convention reproduces the semiclassical equation with drive term
    ``+eps e^{i theta_d}``.
    """
    if n_fock < MIN_FOCK:
        raise CutoffTooSmall(f"Fock cutoff {n_fock} below {MIN_FOCK}")
    a0 = destroy(n_fock)
    eye_c = np.eye(n_fock)
    kerr_op = a0.conj().T @ a0.conj().T @ a0 @ a0
    num = a0.conj().T @ a0
    idc = scenario.mechanism is Mechanism.IDC
    if sigma_z_or_qubit == "qubit":
        a = np.kron(np.eye(2), a0)
        ham = scenario.chi_z * np.kron(SIGMA_Z, num)
        ham = ham + scenario.kerr * (np.kron(SIGMA_Z, kerr_op) if idc else np.kron(np.eye(2), kerr_op))
        collapse = [np.sqrt(scenario.kappa) * a]
        if scenario.purcell_rate > 0:
            collapse.append(np.sqrt(scenario.purcell_rate) * np.kron(SIGMA_MINUS, eye_c))
        include = True
    else:
        s = int(sigma_z_or_qubit)
        if s not in (1, -1):
            raise ValueError("sigma_z must be +1, -1 or 'qubit'")
        a = a0
        ham = scenario.chi_z * s * num + scenario.kerr * (s if idc else 1) * kerr_op
        collapse = [np.sqrt(scenario.kappa) * a]
        include = False
    drive = scenario.drive_amplitude * np.exp(1j * scenario.drive_phase)
    ham = ham + 1j * (drive * a.conj().T - np.conj(drive) * a)
    return Generator(liouvillian(ham, collapse), ham, a, n_fock, include)


def evolve(state: DensityState, generator: Generator, t_max: float, dt: float) -> list[DensityState]:
    """States on the grid ``0, dt, ..., t_max``.

    Raises
    ------
    TruncationBreach
        If the last Fock level holds more than 1e-4 population.
    """
    n = int(round(t_max / dt))
    prop = sla.expm(generator.matrix * dt)
    d = generator.dim
    vec = state.matrix.ravel()
    out = [state]
    for k in range(1, n + 1):
        vec = prop @ vec
        rho = vec.reshape(d, d)
        st = DensityState(state.n_fock, state.include_qubit, rho, state.time + k * dt)
        if st.boundary_population() > BOUNDARY_TOL:
            raise TruncationBreach(f"boundary population {st.boundary_population():.2e} at t = {st.time:.3e}")
        out.append(st)
    return out


@dataclass(frozen=True)
class WignerMap:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray = field(repr=False)

    def normalization(self) -> float:
        return float(trapezoid(trapezoid(self.values, self.x, axis=1), self.p))


def _wigner_values(rho: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    # Laguerre recursion for the Wigner functions of |m><n|,
    # quadratures x = (a + a^dag)/sqrt 2, p = (a - a^dag)/(i sqrt 2)
    xx, pp = np.meshgrid(x, p)
    amp = (xx + 1j * pp) / np.sqrt(2)
    dim = rho.shape[0]
    w_list = [np.exp(-2 * np.abs(amp) ** 2) / np.pi] + [None] * (dim - 1)
    w = np.real(rho[0, 0]) * np.real(w_list[0])
    for n in range(1, dim):
        w_list[n] = 2 * amp * w_list[n - 1] / np.sqrt(n)
        w = w + 2 * np.real(rho[0, n] * w_list[n])
    for m in range(1, dim):
        temp = w_list[m].copy()
        w_list[m] = (2 * np.conj(amp) * temp - np.sqrt(m) * w_list[m - 1]) / np.sqrt(m)
        w = w + np.real(rho[m, m] * w_list[m])
        for n in range(m + 1, dim):
            nxt = (2 * amp * w_list[n - 1] - np.sqrt(m) * temp) / np.sqrt(n)
            temp = w_list[n].copy()
            w_list[n] = nxt
            w = w + 2 * np.real(rho[m, n] * w_list[n])
    return w


def wigner(state: DensityState, x: np.ndarray, p: np.ndarray, norm_tol: float = 1e-2) -> WignerMap:
    """Wigner function of the cavity on a rectangular grid.

    Rows of ``values`` follow ``p`` and columns follow ``x``.

    Raises
    ------
    GridTooCoarse
        If the grid integral of W misses 1 by more than ``norm_tol``.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    wmap = WignerMap(x, p, _wigner_values(state.cavity(), x, p))
    norm = wmap.normalization()
    if abs(norm - 1) > norm_tol:
        raise GridTooCoarse(f"Wigner normalization {norm:.4f} on this grid")
    return wmap


def quadrature_distribution(state: DensityState, x: np.ndarray) -> np.ndarray:
    """Probability density of ``x = (a + a^dag)/sqrt 2`` from the density matrix."""
    rho = state.cavity()
    x = np.asarray(x, dtype=float)
    dim = rho.shape[0]
    # normalized Hermite functions by upward recursion
    psi = np.zeros((dim, x.size))
    psi[0] = np.pi**-0.25 * np.exp(-x * x / 2)
    if dim > 1:
        psi[1] = np.sqrt(2) * x * psi[0]
    for n in range(2, dim):
        psi[n] = np.sqrt(2 / n) * x * psi[n - 1] - np.sqrt((n - 1) / n) * psi[n - 2]
    return np.real(np.einsum("mx,mn,nx->x", psi, rho, psi))


@dataclass(frozen=True)
class NoiseCurve:
    """Measurement noise of both branches versus integration time."""

    tau: np.ndarray
    noise_squared_e: np.ndarray
    noise_squared_g: np.ndarray

    @property
    def noise_squared(self) -> np.ndarray:
        return self.noise_squared_e + self.noise_squared_g

    @property
    def noise(self) -> np.ndarray:
        return np.sqrt(self.noise_squared)


def _branch_noise(gen: Generator, state: DensityState, phi: float, kappa: float, times: np.ndarray) -> np.ndarray:
    """``kappa [t + kappa int int <:dX(t1) dX(t2):>]`` on a uniform grid."""
    n = times.size
    h = times[1] - times[0]
    d = gen.dim
    prop = sla.expm(gen.matrix * h)
    a = gen.a
    x_op = np.exp(-1j * phi) * a + np.exp(1j * phi) * a.conj().T
    vec = state.matrix.ravel()
    sources = np.empty((n, d * d), dtype=complex)
    means = np.empty(n)
    for k in range(n):
        rho = vec.reshape(d, d)
        if np.real(DensityState(gen.n_fock, gen.include_qubit, rho).boundary_population()) > BOUNDARY_TOL:
            raise TruncationBreach("boundary population above 1e-4; raise the Fock cutoff")
        means[k] = np.real(np.trace(x_op @ rho))
        # normal-ordered source: a rho e^{-i phi} + rho a^dag e^{i phi}
        sources[k] = (np.exp(-1j * phi) * a @ rho + np.exp(1j * phi) * rho @ a.conj().T).ravel()
        vec = prop @ vec
    # row vectors x P^m give Tr[X e^{L m h} S]
    rows = np.empty((n, d * d), dtype=complex)
    rows[0] = x_op.T.ravel()
    for m in range(1, n):
        rows[m] = rows[m - 1] @ prop
    lagged = np.real(rows @ sources.T)  # lagged[m, k] = <X(t_k + m h) X(t_k)>
    corr = np.zeros((n, n))
    for k in range(n):
        corr[k:, k] = lagged[: n - k, k] - means[k:] * means[k]
    corr = corr + np.tril(corr, -1).T
    cum = np.zeros(n)
    for m in range(1, n):
        w = np.full(m + 1, h)
        w[0] = w[-1] = h / 2
        cum[m] = w @ corr[: m + 1, : m + 1] @ w
    return kappa * (times + kappa * cum)


def quantum_measurement_noise(
    scenario: ReadoutScenario,
    tau_grid,
    n_fock: int,
    delta_phi_h: float = 0.0,
    n_steps: int = 200,
) -> NoiseCurve:
    """Homodyne noise ``M_N^2(tau)`` from the quantum regression theorem.

    Each branch contributes ``kappa tau`` of shot noise plus the double
    time integral of the normal-ordered output correlations. The excited
    IDC branch includes the qubit when Purcell decay is on.

    Raises
    ------
    TruncationBreach
        If the semiclassical photon number exceeds ``n_fock / 4`` or the
        boundary level becomes populated.
    """
    tau = np.asarray(tau_grid, dtype=float)
    n_bar = (2 * scenario.drive_amplitude / scenario.kappa) ** 2 * np.cos(rotation_angle(scenario)) ** 2
    if n_bar > n_fock / 4:
        raise TruncationBreach(f"photon number {n_bar:.2f} above n_fock/4")
    t_max = float(np.max(tau)) if tau.size else 0.0
    if t_max <= 0:
        return NoiseCurve(tau, np.zeros_like(tau), np.zeros_like(tau))
    times = np.linspace(0.0, t_max, n_steps + 1)
    phi = scenario.homodyne_angle + delta_phi_h
    curves = []
    for branch in (1, -1):
        if branch == 1 and scenario.purcell_rate > 0:
            gen = build_generator(scenario, "qubit", n_fock)
            state = vacuum_state(n_fock, "e")
        else:
            gen = build_generator(scenario, branch, n_fock)
            state = vacuum_state(n_fock)
        curves.append(np.interp(tau, times, _branch_noise(gen, state, phi, scenario.kappa, times)))
    return NoiseCurve(tau, curves[0], curves[1])


def qnd_commutator_check(
    mechanism: str,
    n_fock: int = 6,
    chi: float = 1.0,
    kerr: float = 0.1,
    g_x: float = 0.1,
    omega_r: float = 10.0,
    omega_q: float = 8.0,
) -> float:
    """Spectral norm of ``[H, sigma_z]`` for a readout Hamiltonian.

    ``mechanism`` is ``ideal``, ``idc`` or ``npdc`` for the effective
    dispersive Hamiltonians, or ``transverse`` for the Rabi Hamiltonian
    ``omega_r n + omega_q sigma_z / 2 + g_x (a + a^dag) sigma_x``.
    """
    a = destroy(n_fock)
    eye_c, eye_q = np.eye(n_fock), np.eye(2)
    num = a.conj().T @ a
    kerr_op = a.conj().T @ a.conj().T @ a @ a
    if mechanism == "transverse":
        ham = (
            omega_r * np.kron(eye_q, num)
            + omega_q / 2 * np.kron(SIGMA_Z, eye_c)
            + g_x * np.kron(SIGMA_X, a + a.conj().T)
        )
    else:
        mech = Mechanism(mechanism)
        ham = chi * np.kron(SIGMA_Z, num)
        if mech is Mechanism.IDC:
            ham = ham + kerr * np.kron(SIGMA_Z, kerr_op)
        elif mech is Mechanism.NPDC:
            ham = ham + kerr * np.kron(eye_q, kerr_op)
        ham = ham + np.kron(eye_q, 1j * (a.conj().T - a))
    sz = np.kron(SIGMA_Z, eye_c)
    return float(np.linalg.norm(ham @ sz - sz @ ham, 2))
