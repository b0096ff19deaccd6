"""Registered experiments: task fan-out, per-task computation and table layout.

Every experiment splits into independent tasks (plain dicts, so they can
be shipped to worker processes). A task returns rows per output file;
rows are merged, sorted by their key columns and optionally finalized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import grid_values
from .errors import ConfigError, DriveBoundExceeded, Unreachable
from .fluxqubit import QubitNoiseSpec, QubitSpec, qubit_decoherence, solve_two_levels
from .protocol import (
    SnrCurve,
    epsilon_max_idc,
    epsilon_stop_npdc,
    find_epsilon_min,
    fit_angle_law,
    optimize_homodyne_angle,
    required_time,
)
from .quantum_verify import (
    build_generator,
    evolve,
    quantum_measurement_noise,
    vacuum_state,
    wigner,
)
from .readout import (
    Mechanism,
    ReadoutScenario,
    fidelity_from_snr,
    integrate_langevin,
    trajectory_rows,
)
from .resonator import (
    ResonatorSpec,
    SquidSpec,
    critical_photon_number,
    flux_sensitivity,
    kerr_strength,
    solve_frequency,
)

TWO_PI = 2 * np.pi

Rows = dict[str, list[tuple]]


def resonator_from(block: dict) -> ResonatorSpec:
    squid = SquidSpec(
        TWO_PI * block["squid_ej_per_junction_over_2pi_thz"] * 1e12,
        block["squid_capacitance_ff"] * 1e-15,
        block["squid_asymmetry"],
    )
    return ResonatorSpec(
        TWO_PI * block["omega0_over_2pi_ghz"] * 1e9,
        block["total_inductance_nh"] * 1e-9,
        TWO_PI * 16e6,
        (squid,) * block["squid_count"],
    )


def mechanisms(block: dict) -> list[Mechanism]:
    out = []
    for name in block["mechanisms"]:
        try:
            out.append(Mechanism(name))
        except ValueError:
            raise ConfigError(f"readout.mechanisms: unknown mechanism {name!r}") from None
    return out


def scenario_from(
    cfg: dict,
    mechanism: Mechanism,
    epsilon_over_kappa: float | None = None,
    kappa_mhz: float | None = None,
    epsilon_mhz: float | None = None,
    scaled: bool = False,
) -> ReadoutScenario:
    """Readout scenario from the config; ``scaled`` uses units of kappa."""
    block = cfg["readout"]
    kappa_mhz = block["kappa_over_2pi_mhz"] if kappa_mhz is None else kappa_mhz
    kappa = 1.0 if scaled else TWO_PI * kappa_mhz * 1e6

    def rate(mhz: float) -> float:
        return mhz / kappa_mhz if scaled else TWO_PI * mhz * 1e6

    if epsilon_mhz is not None:
        eps = rate(epsilon_mhz)
    else:
        eps = (block["epsilon_over_kappa"] if epsilon_over_kappa is None else epsilon_over_kappa) * kappa
    n_c = None
    if mechanism is Mechanism.NPDC and "resonator" in cfg:
        res = resonator_from(cfg["resonator"])
        n_c = critical_photon_number(res, cfg["resonator"]["static_flux_phi0"])
    ideal = mechanism is Mechanism.IDEAL
    return ReadoutScenario(
        mechanism,
        chi_z=rate(block["chi_over_2pi_mhz"]),
        kappa=kappa,
        drive_amplitude=eps,
        kerr=0.0 if ideal else rate(block["kerr_over_2pi_khz"] * 1e-3),
        drive_phase=block["drive_phase_rad"],
        homodyne_angle=block["drive_phase_rad"] - block["homodyne_offset_rad"],
        lam=block["lambda_idc"] if mechanism is Mechanism.IDC else 0.0,
        purcell_enabled=block["purcell"] and mechanism is Mechanism.IDC,
        critical_photons=n_c,
    )


# resonator figures


def _resonator_tasks(cfg: dict) -> list[dict]:
    return [{"flux": f} for f in grid_values(cfg["grid"]["flux_phi0"])]


def _resonator_row(cfg: dict, flux: float) -> tuple:
    res = resonator_from(cfg["resonator"])
    return (
        flux,
        solve_frequency(res, flux) / TWO_PI,
        flux_sensitivity(res, flux) / TWO_PI / 1e3,
        kerr_strength(res, flux) / TWO_PI,
        critical_photon_number(res, flux),
    )


RESONATOR_HEADER = ("flux_phi0", "omega_r_Hz", "R_Hz_per_mPhi0", "K_Hz", "n_c")


def _fig2_run(cfg: dict, task: dict) -> Rows:
    return {"fig2_sensitivity.csv": [_resonator_row(cfg, task["flux"])]}


def _fig3_run(cfg: dict, task: dict) -> Rows:
    return {"fig3_critical_photons.csv": [_resonator_row(cfg, task["flux"])]}


# semiclassical readout figures


def _fig4a_tasks(cfg: dict) -> list[dict]:
    return [{"mechanism": m.value} for m in mechanisms(cfg["readout"])]


def _fig4a_run(cfg: dict, task: dict) -> Rows:
    kt = np.array(grid_values(cfg["grid"]["kappa_tau"]))
    if kt.size == 0:
        return {"fig4a_snr.csv": []}
    sc = scenario_from(cfg, Mechanism(task["mechanism"]))
    curve = SnrCurve(sc, float(kt.max()) / sc.kappa)
    snr = curve(kt / sc.kappa)
    fid = fidelity_from_snr(snr)
    return {"fig4a_snr.csv": [(task["mechanism"], float(x), float(r), float(f)) for x, r, f in zip(kt, snr, fid)]}


def _fig4b_tasks(cfg: dict) -> list[dict]:
    return [
        {"mechanism": m.value, "kappa_mhz": k}
        for m in mechanisms(cfg["readout"])
        for k in grid_values(cfg["grid"]["kappa_over_2pi_mhz"])
    ]


def _fig4b_run(cfg: dict, task: dict) -> Rows:
    block = cfg["readout"]
    sc = scenario_from(
        cfg, Mechanism(task["mechanism"]), kappa_mhz=task["kappa_mhz"], epsilon_mhz=block["epsilon_over_2pi_mhz"]
    )
    taus = np.array(block["tau_ns_values"]) * 1e-9
    curve = SnrCurve(sc, float(taus.max()))
    snr = curve(taus)
    return {
        "fig4b_fidelity.csv": [
            (task["mechanism"], float(sc.kappa * t), float(r), float(fidelity_from_snr(r)), task["kappa_mhz"], float(t * 1e9))
            for t, r in zip(taus, snr)
        ]
    }


def _fig4cd_tasks(cfg: dict) -> list[dict]:
    mechs = mechanisms(cfg["readout"])
    tasks: list[dict] = [{"kind": "bounds", "mechanism": m.value} for m in mechs]
    tasks += [
        {"kind": "point", "mechanism": m.value, "eps": e}
        for m in mechs
        for e in grid_values(cfg["grid"]["epsilon_over_kappa"])
    ]
    return tasks


def _fig4cd_run(cfg: dict, task: dict) -> Rows:
    proto = cfg["protocol"]
    mech = Mechanism(task["mechanism"])
    optimize = proto["optimize_angle"] and mech is Mechanism.NPDC
    if task["kind"] == "bounds":
        sc = scenario_from(cfg, mech)
        tau_max = proto["kappa_tau_max"] / sc.kappa
        rows = []
        if mech is Mechanism.IDC:
            eps_min = find_epsilon_min(sc, proto["target_fidelity"], proto["kappa_tau_max"])
            if np.isfinite(eps_min):
                curve = SnrCurve(replace(sc, drive_amplitude=eps_min), tau_max)
                values = curve(curve.grid)
                rows.append((mech.value, "start", eps_min / sc.kappa, float(curve.grid[np.argmax(values)] * sc.kappa)))
            eps_stop = epsilon_max_idc(sc)
        else:
            eps_stop = epsilon_stop_npdc(sc)
        if np.isfinite(eps_stop):
            stop = replace(sc, drive_amplitude=eps_stop)
            try:
                if optimize:
                    tau = optimize_homodyne_angle(stop, proto["target_fidelity"], tau_max).tau
                else:
                    tau = required_time(stop, proto["target_fidelity"], tau_max)
            except Unreachable:
                tau = np.inf
            rows.append((mech.value, "stop", eps_stop / sc.kappa, float(tau * sc.kappa)))
        return {"fig4cd_bounds.csv": rows}
    sc = scenario_from(cfg, mech, epsilon_over_kappa=task["eps"])
    tau_max = proto["kappa_tau_max"] / sc.kappa
    try:
        if optimize:
            opt = optimize_homodyne_angle(sc, proto["target_fidelity"], tau_max)
            row = (mech.value, task["eps"], opt.tau * sc.kappa, True, opt.delta_phi)
        else:
            row = (mech.value, task["eps"], required_time(sc, proto["target_fidelity"], tau_max) * sc.kappa, True, 0.0)
    except Unreachable:
        row = (mech.value, task["eps"], np.inf, False, np.nan)
    except DriveBoundExceeded:
        row = (mech.value, task["eps"], np.nan, False, np.nan)
    return {"fig4cd_time_to_fidelity.csv": [row]}


def _figA5_tasks(cfg: dict) -> list[dict]:
    return [{"eps": e} for e in grid_values(cfg["grid"]["epsilon_over_kappa"])]


def _figA5_run(cfg: dict, task: dict) -> Rows:
    proto = cfg["protocol"]
    sc = scenario_from(cfg, Mechanism.NPDC, epsilon_over_kappa=task["eps"])
    opt = optimize_homodyne_angle(sc, proto["target_fidelity"], proto["kappa_tau_max"] / sc.kappa)
    row = (opt.delta_phi, task["eps"], np.nan, np.nan, np.nan, opt.tau * sc.kappa, opt.tau_unshifted * sc.kappa)
    return {"figA5_optimal_angle.csv": [row]}


def _figA5_finalize(cfg: dict, tables: Rows) -> Rows:
    rows = tables["figA5_optimal_angle.csv"]
    if len(rows) < 2:
        return tables
    a, b, r2 = fit_angle_law([r[0] for r in rows], [r[1] for r in rows])
    tables["figA5_optimal_angle.csv"] = [(r[0], r[1], a, b, r2, r[5], r[6]) for r in rows]
    return tables


def _custom_tasks(cfg: dict) -> list[dict]:
    return [{"mechanism": mechanisms(cfg["readout"])[0].value}]


def _custom_run(cfg: dict, task: dict) -> Rows:
    block = cfg["readout"]
    sc = scenario_from(cfg, Mechanism(task["mechanism"]))
    t_max = block["kappa_t_max"] / sc.kappa
    traj = integrate_langevin(sc, t_max)
    n = max(int(round(block["kappa_t_max"] / block["output_step_kappa"])), 1)
    return {"custom_trajectory.csv": trajectory_rows(traj.resample(np.linspace(0, t_max, n + 1)))}


# quantum figures


def _quantum_scenario(cfg: dict, mech: Mechanism) -> ReadoutScenario:
    return scenario_from(cfg, mech, epsilon_over_kappa=cfg["quantum"]["epsilon_over_kappa"], scaled=True)


def _fig5_tasks(cfg: dict) -> list[dict]:
    return [{"mechanism": m.value, "branch": b} for m in mechanisms(cfg["readout"]) for b in ("e", "g")]


def _fig5_run(cfg: dict, task: dict) -> Rows:
    q = cfg["quantum"]
    mech = Mechanism(task["mechanism"])
    sc = _quantum_scenario(cfg, mech)
    n_fock = q["fock_cutoff"]
    if task["branch"] == "e" and sc.purcell_rate > 0:
        gen, state = build_generator(sc, "qubit", n_fock), vacuum_state(n_fock, "e")
    else:
        gen, state = build_generator(sc, 1 if task["branch"] == "e" else -1, n_fock), vacuum_state(n_fock)
    final = evolve(state, gen, q["kappa_tau"], q["kappa_tau"] / q["time_steps"])[-1]
    axis = np.linspace(-q["wigner_extent"], q["wigner_extent"], q["wigner_points"])
    wmap = wigner(final, axis, axis)
    rho = final.cavity()
    a = np.diag(np.sqrt(np.arange(1, n_fock)), 1)
    mean = complex(np.trace(a @ rho))
    photons = float(np.real(np.trace(a.T @ a @ rho)))
    purity = float(np.real(np.trace(rho @ rho)))
    grid_rows = [
        (float(x), float(p), float(wmap.values[j, i])) for i, x in enumerate(axis) for j, p in enumerate(axis)
    ]
    return {
        f"fig5_wigner_{mech.value}_{task['branch']}.csv": grid_rows,
        "fig5_summary.csv": [(mech.value, task["branch"], mean.real, mean.imag, photons, purity)],
    }


def _fig5_headers(cfg: dict) -> dict[str, tuple]:
    out = {
        f"fig5_wigner_{m.value}_{b}.csv": ("x", "p", "w")
        for m in mechanisms(cfg["readout"])
        for b in ("e", "g")
    }
    out["fig5_summary.csv"] = ("mechanism", "branch", "re_alpha", "im_alpha", "photon_number", "purity")
    return out


def _fig6_tasks(cfg: dict) -> list[dict]:
    return [{"mechanism": m.value} for m in mechanisms(cfg["readout"])]


def _fig6_run(cfg: dict, task: dict) -> Rows:
    q = cfg["quantum"]
    kt = np.array(grid_values(cfg["grid"]["kappa_tau"]))
    if kt.size == 0:
        return {"_noise": []}
    sc = _quantum_scenario(cfg, Mechanism(task["mechanism"]))
    curve = quantum_measurement_noise(sc, kt, q["fock_cutoff"], q["delta_phi_rad"], q["time_steps"])
    return {"_noise": [(task["mechanism"], float(x), float(m)) for x, m in zip(kt, curve.noise)]}


def _fig6_finalize(cfg: dict, tables: Rows) -> Rows:
    noise = {(m, x): v for m, x, v in tables.pop("_noise", [])}
    rows = []
    for x in sorted({x for _, x in noise}):
        rows.append((x,) + tuple(noise.get((m, x), np.nan) for m in ("ideal", "idc", "npdc")))
    tables["fig6_noise.csv"] = rows
    return tables


# qubit figure


def _figA3_tasks(cfg: dict) -> list[dict]:
    return [
        {"two_alpha0": p, "f_alpha": f}
        for p in cfg["qubit"]["two_alpha0_panels"]
        for f in grid_values(cfg["grid"]["f_alpha"])
    ]


def _panel_file(two_alpha0: float) -> str:
    return f"figA3_two_alpha0_{two_alpha0:g}.csv"


def _figA3_run(cfg: dict, task: dict) -> Rows:
    block = cfg["qubit"]
    spec = QubitSpec(
        TWO_PI * block["ej_over_2pi_ghz"] * 1e9,
        block["ej_over_ec"],
        task["two_alpha0"] / 2,
        task["f_alpha"],
        block["f_epsilon"],
        block["fluxoid_offset"],
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve_two_levels(spec, block["charge_cutoff"])
    dec = qubit_decoherence(sol, QubitNoiseSpec(block["transverse_noise_power_s"], block["alpha_noise_amplitude"]))
    row = (
        task["f_alpha"], sol.qubit_frequency / TWO_PI, spec.alpha_prime, sol.I_minus * 1e9,
        sol.I_persistent * 1e9, dec.t1 * 1e6, dec.t2 * 1e6, spec.valid_double_well,
    )
    return {_panel_file(task["two_alpha0"]): [row]}


QUBIT_HEADER = ("f_alpha", "omega_q_Hz", "alpha_prime", "I_minus_nA", "I_p_nA", "T1_us", "T2_us", "valid_double_well")


@dataclass(frozen=True)
class Experiment:
    name: str
    make_tasks: Callable[[dict], list[dict]]
    run_task: Callable[[dict, dict], Rows]
    headers: Callable[[dict], dict[str, tuple]]
    sort_keys: dict[str, tuple[int, ...]]
    finalize: Callable[[dict, Rows], Rows] | None = None
    sweep_field: str | None = None


def _fixed(headers: dict[str, tuple]) -> Callable[[dict], dict[str, tuple]]:
    return lambda cfg: headers


REGISTRY: dict[str, Experiment] = {
    "fig2": Experiment(
        "fig2", _resonator_tasks, _fig2_run, _fixed({"fig2_sensitivity.csv": RESONATOR_HEADER}),
        {"fig2_sensitivity.csv": (0,)}, sweep_field="flux_phi0",
    ),
    "fig3": Experiment(
        "fig3", _resonator_tasks, _fig3_run, _fixed({"fig3_critical_photons.csv": RESONATOR_HEADER}),
        {"fig3_critical_photons.csv": (0,)}, sweep_field="flux_phi0",
    ),
    "fig4a": Experiment(
        "fig4a", _fig4a_tasks, _fig4a_run,
        _fixed({"fig4a_snr.csv": ("mechanism", "kappa_tau", "snr", "fidelity")}),
        {"fig4a_snr.csv": (0, 1)}, sweep_field="kappa_tau",
    ),
    "fig4b": Experiment(
        "fig4b", _fig4b_tasks, _fig4b_run,
        _fixed({"fig4b_fidelity.csv": ("mechanism", "kappa_tau", "snr", "fidelity", "kappa_over_2pi_mhz", "tau_ns")}),
        {"fig4b_fidelity.csv": (0, 5, 4)},
    ),
    "fig4cd": Experiment(
        "fig4cd", _fig4cd_tasks, _fig4cd_run,
        _fixed({
            "fig4cd_time_to_fidelity.csv": (
                "mechanism", "epsilon_over_kappa", "kappa_tau_required", "reachable", "delta_phi_opt_rad"
            ),
            "fig4cd_bounds.csv": ("mechanism", "marker", "epsilon_over_kappa", "kappa_tau_required"),
        }),
        {"fig4cd_time_to_fidelity.csv": (0, 1), "fig4cd_bounds.csv": (0, 1)},
        sweep_field="epsilon_over_kappa",
    ),
    "fig5": Experiment(
        "fig5", _fig5_tasks, _fig5_run, _fig5_headers, {"fig5_summary.csv": (0, 1)},
    ),
    "fig6": Experiment(
        "fig6", _fig6_tasks, _fig6_run,
        _fixed({"fig6_noise.csv": ("kappa_tau", "M_N_ideal", "M_N_idc", "M_N_npdc")}),
        {"_noise": (0, 1), "fig6_noise.csv": (0,)}, _fig6_finalize, sweep_field="kappa_tau",
    ),
    "figA3": Experiment(
        "figA3", _figA3_tasks, _figA3_run,
        lambda cfg: {_panel_file(p): QUBIT_HEADER for p in cfg["qubit"]["two_alpha0_panels"]},
        {}, sweep_field="f_alpha",
    ),
    "figA5": Experiment(
        "figA5", _figA5_tasks, _figA5_run,
        _fixed({
            "figA5_optimal_angle.csv": (
                "delta_phi_opt_rad", "epsilon_over_kappa", "fit_a", "fit_b", "fit_r2",
                "kappa_tau_opt", "kappa_tau_unshifted",
            )
        }),
        {"figA5_optimal_angle.csv": (1,)}, _figA5_finalize, sweep_field="epsilon_over_kappa",
    ),
    "custom": Experiment(
        "custom", _custom_tasks, _custom_run,
        _fixed({
            "custom_trajectory.csv": (
                "t", "re_alpha_e", "im_alpha_e", "re_alpha_g", "im_alpha_g", "n_e", "n_g", "sigma_z_mean"
            )
        }),
        {"custom_trajectory.csv": (0,)},
    ),
}


def sort_rows(rows: list[tuple], key_columns: tuple[int, ...] | None) -> list[tuple]:
    """Deterministic order; default key is the first column."""
    cols = key_columns or (0,)
    return sorted(rows, key=lambda r: tuple(r[c] for c in cols))


def get_experiment(name: str) -> Experiment:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}") from None


def run_task(cfg: dict, task: dict) -> Rows:
    return get_experiment(cfg["experiment"]).run_task(cfg, task)


def describe(task: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in task.items())


