"""Experiment configuration: YAML key-value trees with units in key names.

A configuration holds the experiment name, run settings, one block per
model component the experiment uses, and a ``grid`` block with the swept
axis. Grids are either explicit lists or ``{start, stop, num}`` ranges.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigError

RUN_KEYS = {"experiment": str, "seed": int, "workers": int, "output_dir": str}
SWEEPABLE = ("epsilon_over_kappa", "f_alpha", "flux_phi0", "kappa_tau")

RESONATOR = {
    "omega0_over_2pi_ghz": 6.0,
    "total_inductance_nh": 10.0,
    "squid_ej_per_junction_over_2pi_thz": 2.5,
    "squid_capacitance_ff": 0.0,
    "squid_asymmetry": 0.0,
    "squid_count": 1,
    "static_flux_phi0": 0.48,
    "flux_noise_phi0": 5e-6,
    "current_noise_fraction": 5e-6,
}

QUBIT = {
    "ej_over_2pi_ghz": 320.0,
    "ej_over_ec": 70.0,
    "two_alpha0": 0.75,
    "f_alpha": 0.0,
    "f_epsilon": 0.0,
    "fluxoid_offset": 1,
    "charge_cutoff": 10,
    "transverse_noise_power_s": 2.5e-19,
    "alpha_noise_amplitude": 5e-6,
}

READOUT = {
    "mechanisms": ["ideal", "idc", "npdc"],
    "chi_over_2pi_mhz": 8.0,
    "kappa_over_2pi_mhz": 16.0,
    "kerr_over_2pi_khz": -100.0,
    "epsilon_over_kappa": 0.5,
    "drive_phase_rad": 0.0,
    "homodyne_offset_rad": float(np.pi / 2),
    "lambda_idc": 0.1,
    "purcell": True,
}

PROTOCOL = {"target_fidelity": 0.9999, "kappa_tau_max": 500.0, "optimize_angle": True}

QUANTUM = {
    "fock_cutoff": 20,
    "epsilon_over_kappa": 1.22,
    "time_steps": 200,
    "delta_phi_rad": 0.0,
}


def _range(start: float, stop: float, num: int) -> dict:
    return {"start": start, "stop": stop, "num": num}


# blocks and grid axis per experiment; values override the shared blocks
EXPERIMENTS: dict[str, dict[str, Any]] = {
    "fig2": {
        "blocks": {"resonator": {}},
        "grid": {"flux_phi0": _range(0.0, 0.49, 50)},
        "about": "resonator frequency, flux sensitivity, Kerr and n_c versus flux",
    },
    "fig3": {
        "blocks": {"resonator": {}},
        "grid": {"flux_phi0": _range(0.30, 0.49, 20)},
        "about": "critical photon number versus flux",
    },
    "fig4a": {
        "blocks": {"readout": {}},
        "grid": {"kappa_tau": _range(0.5, 100.0, 200)},
        "about": "SNR and fidelity versus kappa tau, eps = chi",
    },
    "fig4b": {
        "blocks": {
            "readout": {"epsilon_over_2pi_mhz": 8.0, "tau_ns_values": [30.0, 80.0], "epsilon_over_kappa": None}
        },
        "grid": {"kappa_over_2pi_mhz": _range(2.0, 40.0, 39)},
        "about": "fidelity versus kappa at fixed integration times",
    },
    "fig4cd": {
        "blocks": {"resonator": {}, "readout": {"mechanisms": ["idc", "npdc"]}, "protocol": {}},
        "grid": {
            "epsilon_over_kappa": [0.2, 0.25, 0.3, 0.4, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5,
                                   4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
        },
        "about": "time to 99.99% fidelity versus drive, with start and stop points",
    },
    "fig5": {
        "blocks": {
            "readout": {},
            "quantum": {"kappa_tau": 3.0, "time_steps": 60, "wigner_points": 61, "wigner_extent": 6.0},
        },
        "grid": {},
        "about": "Wigner functions of both branches at kappa tau = 3 (reduced drive)",
    },
    "fig6": {
        "blocks": {"readout": {}, "quantum": {}},
        "grid": {"kappa_tau": _range(0.5, 10.0, 20)},
        "about": "quantum measurement noise versus kappa tau (reduced drive)",
    },
    "figA3": {
        "blocks": {"qubit": {"two_alpha0_panels": [1.0, 0.75], "two_alpha0": None}},
        "grid": {"f_alpha": _range(-0.3, 0.3, 25)},
        "about": "flux-qubit frequency, currents and lifetimes versus f_alpha",
    },
    "figA5": {
        "blocks": {"readout": {"mechanisms": ["npdc"]}, "protocol": {}},
        "grid": {"epsilon_over_kappa": _range(1.0, 8.0, 15)},
        "about": "optimal homodyne-angle shift versus drive and its linear fit",
    },
    "custom": {
        "blocks": {
            "readout": {"mechanisms": ["npdc"], "kappa_t_max": 20.0, "output_step_kappa": 0.05},
        },
        "grid": {},
        "about": "trajectory dump of a single readout scenario",
    },
}

BASE_BLOCKS = {
    "resonator": RESONATOR,
    "qubit": QUBIT,
    "readout": READOUT,
    "protocol": PROTOCOL,
    "quantum": QUANTUM,
}


def _block_defaults(experiment: str, name: str) -> dict:
    out = copy.deepcopy(BASE_BLOCKS[name])
    for key, value in EXPERIMENTS[experiment]["blocks"][name].items():
        if value is None:
            out.pop(key, None)
        else:
            out[key] = copy.deepcopy(value)
    return out


def default_config(experiment: str) -> dict:
    """Complete default configuration of a registered experiment."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    cfg: dict[str, Any] = {"experiment": experiment, "seed": 0, "workers": 1, "output_dir": experiment}
    for name in EXPERIMENTS[experiment]["blocks"]:
        cfg[name] = _block_defaults(experiment, name)
    cfg["grid"] = copy.deepcopy(EXPERIMENTS[experiment]["grid"])
    return cfg


def _check_value(path: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}: expected a non-empty list, got {value!r}")
        return [_check_value(f"{path}[{i}]", v, default[0]) for i, v in enumerate(value)]
    raise ConfigError(f"{path}: unsupported value {value!r}")


def _check_grid_spec(path: str, spec: Any) -> Any:
    if isinstance(spec, list):
        for i, v in enumerate(spec):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}[{i}]: expected a number, got {v!r}")
        return [float(v) for v in spec]
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num"}
        if unknown:
            raise ConfigError(f"{path}: unknown key {sorted(unknown)[0]!r}")
        missing = {"start", "stop", "num"} - set(spec)
        if missing:
            raise ConfigError(f"{path}: missing key {sorted(missing)[0]!r}")
        return {
            "start": _check_value(f"{path}.start", spec["start"], 0.0),
            "stop": _check_value(f"{path}.stop", spec["stop"], 0.0),
            "num": _check_value(f"{path}.num", spec["num"], 0),
        }
    raise ConfigError(f"{path}: expected a list or a start/stop/num mapping")


def validate_config(raw: Any) -> dict:
    """Check a parsed configuration and fill run-setting defaults.

    Raises
    ------
    ConfigError
        On unknown keys, missing blocks or wrongly typed values.
    """
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    if "experiment" not in raw:
        raise ConfigError("missing key 'experiment'")
    experiment = raw["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    defaults = default_config(experiment)
    allowed = set(RUN_KEYS) | set(EXPERIMENTS[experiment]["blocks"]) | {"grid"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for experiment {experiment}")
    cfg: dict[str, Any] = {}
    for key, typ in RUN_KEYS.items():
        cfg[key] = _check_value(key, raw.get(key, defaults[key]), typ())
    if cfg["workers"] < 1:
        raise ConfigError("workers: must be at least 1")
    for block in EXPERIMENTS[experiment]["blocks"]:
        if block not in raw:
            raise ConfigError(f"missing block {block!r}")
        values = raw[block]
        if not isinstance(values, dict):
            raise ConfigError(f"{block}: expected a mapping")
        out = {}
        for key, default in defaults[block].items():
            out[key] = _check_value(f"{block}.{key}", values.get(key, default), default)
        for key in values:
            if key not in defaults[block]:
                raise ConfigError(f"unknown key {key!r} in block {block!r}")
        cfg[block] = out
    grid = raw.get("grid", defaults["grid"]) or {}
    if not isinstance(grid, dict):
        raise ConfigError("grid: expected a mapping")
    for key in grid:
        if key not in defaults["grid"]:
            raise ConfigError(f"unknown key {key!r} in block 'grid'")
    cfg["grid"] = {k: _check_grid_spec(f"grid.{k}", grid.get(k, v)) for k, v in defaults["grid"].items()}
    return cfg


def grid_values(spec: Any) -> list[float]:
    """Expand a grid specification, rounding to 12 decimals."""
    if isinstance(spec, dict):
        vals = np.linspace(spec["start"], spec["stop"], spec["num"]) if spec["num"] > 0 else []
    else:
        vals = spec
    return [float(round(v, 12)) for v in vals]


def load_config(path: str | Path) -> dict:
    """Parse and validate a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def parse_config(text: str) -> dict:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    return validate_config(raw)


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=None)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()
