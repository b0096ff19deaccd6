"""Experiment execution: parallel fan-out, deterministic CSV, manifest and plot scripts."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import multiprocessing
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import EXPERIMENTS, SWEEPABLE, config_hash, grid_values
from .errors import ConfigError, NumericalError
from .experiments import describe, get_experiment, resonator_from, scenario_from, sort_rows
from .fluxqubit import QubitSpec
from .protocol import bistability_check, epsilon_max_idc
from .readout import Mechanism, rotation_angle
from .resonator import critical_photon_number

OUTPUT_ROOT_ENV = "FLUXQND_OUTPUT_ROOT"


def format_cell(value: Any) -> str:
    """CSV cell text: 17 significant digits for floats, lowercase booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    return str(value)


def csv_text(header: tuple, rows: list[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


@dataclass
class TaskResult:
    task: dict
    rows: dict[str, list[tuple]] = field(default_factory=dict)
    status: str = "ok"
    error: str = ""
    numerical: bool = False


def _execute(cfg: dict, task: dict) -> TaskResult:
    # single-threaded BLAS keeps results independent of the worker count
    with threadpool_limits(limits=1):
        try:
            return TaskResult(task, get_experiment(cfg["experiment"]).run_task(cfg, task))
        except NumericalError as exc:
            return TaskResult(task, status="failed", error=f"{type(exc).__name__}: {exc}", numerical=True)
        except Exception as exc:  # recorded per task, never fatal to the sweep
            return TaskResult(
                task, status="failed", error=f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
            )


def execute_tasks(cfg: dict, tasks: list[dict], workers: int) -> list[TaskResult]:
    if workers <= 1 or len(tasks) <= 1:
        return [_execute(cfg, t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
        return list(pool.map(_execute, [cfg] * len(tasks), tasks))


def merge_tables(cfg: dict, results: list[TaskResult]) -> dict[str, tuple[tuple, list[tuple]]]:
    """Merge task rows in a worker-count independent order."""
    exp = get_experiment(cfg["experiment"])
    tables: dict[str, list[tuple]] = {}
    for res in results:
        for name, rows in res.rows.items():
            tables.setdefault(name, []).extend(rows)
    headers = exp.headers(cfg)
    for name in list(headers) + list(exp.sort_keys):
        tables.setdefault(name, [])
    for name in tables:
        tables[name] = sort_rows(tables[name], exp.sort_keys.get(name))
    if exp.finalize is not None:
        tables = exp.finalize(cfg, tables)
    return {name: (headers[name], tables.get(name, [])) for name in headers}


@dataclass
class RunOutcome:
    output_dir: Path
    files: dict[str, str]
    results: list[TaskResult]

    @property
    def failed(self) -> list[TaskResult]:
        return [r for r in self.results if r.status != "ok"]


def output_directory(cfg: dict, override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    out = Path(cfg["output_dir"])
    if out.is_absolute():
        return out
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs")) / out


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_experiment(cfg: dict, output_dir: str | Path | None = None, workers: int | None = None) -> RunOutcome:
    """Run every task of the configured experiment and write its outputs."""
    started = _timestamp()
    exp = get_experiment(cfg["experiment"])
    tasks = exp.make_tasks(cfg)
    results = execute_tasks(cfg, tasks, cfg["workers"] if workers is None else workers)
    tables = merge_tables(cfg, results)
    out = output_directory(cfg, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, (header, rows) in tables.items():
        text = csv_text(header, rows)
        (out / name).write_text(text, encoding="utf-8")
        files[name] = hashlib.sha256(text.encode()).hexdigest()
    script = plot_script(cfg["experiment"], {n: h for n, (h, _) in tables.items()})
    (out / f"plot_{cfg['experiment']}.py").write_text(script, encoding="utf-8")
    manifest = {
        "experiment": cfg["experiment"],
        "config_hash": config_hash(cfg),
        "code_version": __version__,
        "seed": cfg["seed"],
        "started": started,
        "finished": _timestamp(),
        "tasks": [{"task": describe(r.task), "status": r.status, "error": r.error} for r in results],
        "outputs": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return RunOutcome(out, files, results)


def override_grid(cfg: dict, field_name: str, values: list[float]) -> dict:
    """Copy of ``cfg`` with the swept axis replaced by ``values``."""
    if field_name not in SWEEPABLE:
        raise ConfigError(f"field {field_name!r} is not sweepable; choose from {list(SWEEPABLE)}")
    if field_name not in cfg["grid"]:
        axes = list(cfg["grid"]) or ["none"]
        raise ConfigError(f"experiment {cfg['experiment']} sweeps {axes[0]}, not {field_name!r}")
    out = json.loads(json.dumps(cfg))
    out["grid"][field_name] = [float(v) for v in values]
    return out


# plotting scripts

_PLOT_HEAD = '''"""Plot {experiment}: {about}.

Run from the directory holding the CSV files.
"""

import csv

import matplotlib.pyplot as plt


def load(name):
    with open(name, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def column(rows, key):
    out = []
    for r in rows:
        v = r[key]
        out.append({{"true": 1.0, "false": 0.0}}.get(v, None) if v in ("true", "false") else float(v))
    return out

'''

_PLOT_FILE = '''
rows = load({name!r})
groups = sorted({{r.get({group!r}, "") for r in rows}})
ys = {ys!r}
fig, axes = plt.subplots(len(ys), 1, figsize=(6, 2.6 * len(ys)), squeeze=False)
for ax, y in zip(axes[:, 0], ys):
    for g in groups:
        sub = [r for r in rows if r.get({group!r}, "") == g]
        ax.plot(column(sub, {x!r}), column(sub, y), label=g or None)
    ax.set_xlabel({x!r})
    ax.set_ylabel(y)
    if any(groups):
        ax.legend()
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''

_PLOT_WIGNER = '''
rows = load({name!r})
xs = sorted({{float(r["x"]) for r in rows}})
ps = sorted({{float(r["p"]) for r in rows}})
grid = {{(float(r["x"]), float(r["p"])): float(r["w"]) for r in rows}}
values = [[grid[(x, p)] for x in xs] for p in ps]
fig, ax = plt.subplots(figsize=(4, 4))
ax.pcolormesh(xs, ps, values, cmap="RdBu_r", shading="auto")
ax.set_xlabel("x")
ax.set_ylabel("p")
ax.set_title({name!r})
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''

_CATEGORICAL = {"mechanism", "marker", "branch"}


def plot_script(experiment: str, headers: dict[str, tuple]) -> str:
    """Self-contained matplotlib script plotting each CSV of a run."""
    parts = [_PLOT_HEAD.format(experiment=experiment, about=EXPERIMENTS[experiment]["about"])]
    for name, header in headers.items():
        png = name.replace(".csv", ".png")
        if header == ("x", "p", "w"):
            parts.append(_PLOT_WIGNER.format(name=name, png=png))
            continue
        group = next((h for h in header if h in _CATEGORICAL), "")
        numeric = [h for h in header if h not in _CATEGORICAL]
        if experiment == "fig4b":
            group, x = "tau_ns", "kappa_over_2pi_mhz"
        elif experiment == "figA5":
            x = "delta_phi_opt_rad"
        else:
            x = numeric[0]
        ys = [h for h in numeric if h not in (x, group)]
        parts.append(_PLOT_FILE.format(name=name, group=group, ys=ys, x=x, png=png))
    return "".join(parts)


# physics lint


@dataclass(frozen=True)
class Finding:
    level: str
    check: str
    message: str


def lint_config(cfg: dict) -> list[Finding]:
    """Physics checks of a validated configuration; never raises."""
    out: list[Finding] = []

    def guarded(check: str, fn) -> None:
        try:
            fn()
        except Exception as exc:
            out.append(Finding("warning", check, f"could not evaluate: {type(exc).__name__}: {exc}"))

    if "qubit" in cfg:
        block = cfg["qubit"]
        panels = block.get("two_alpha0_panels", [block.get("two_alpha0")])

        def qubit_check() -> None:
            for two_a in panels:
                for fa in grid_values(cfg["grid"].get("f_alpha", [block["f_alpha"]])) or [block["f_alpha"]]:
                    spec = QubitSpec(1.0, block["ej_over_ec"], two_a / 2, fa, block["f_epsilon"])
                    if not spec.valid_double_well:
                        out.append(Finding(
                            "warning", "double_well",
                            f"2alpha0 = {two_a:g}, f_alpha = {fa:g}: alpha' = {spec.alpha_prime:.4g} outside (0.5, 1)",
                        ))
                        return
            out.append(Finding("ok", "double_well", "alpha' within (0.5, 1) on the whole grid"))

        guarded("double_well", qubit_check)

    if "readout" in cfg:
        mechs = [Mechanism(m) for m in cfg["readout"]["mechanisms"]]

        def bistability() -> None:
            for m in mechs:
                sc = scenario_from(cfg, m, epsilon_over_kappa=cfg["readout"].get("epsilon_over_kappa", 0.5))
                rep = bistability_check(sc)
                r = abs(sc.chi_z / sc.kappa)
                level = "ok" if rep.status == "Safe" else "warning"
                out.append(Finding(
                    level, "bistability",
                    f"{m.value}: delta_s in [{-r:g}, {r:g}], {rep.status}; positive roots e/g = {rep.positive_roots}",
                ))

        guarded("bistability", bistability)

        if Mechanism.IDC in mechs:
            def idc_bound() -> None:
                sc = scenario_from(cfg, Mechanism.IDC, epsilon_over_kappa=1.0)
                bound = epsilon_max_idc(sc) / sc.kappa
                top = max(_drive_grid(cfg), default=0.0)
                level = "ok" if top <= bound else "warning"
                out.append(Finding(level, "idc_drive_bound", f"eps_max/kappa = {bound:.4g}, largest drive {top:g}"))

            guarded("idc_drive_bound", idc_bound)

        if "resonator" in cfg and Mechanism.NPDC in mechs:
            def nc_margin() -> None:
                res = resonator_from(cfg["resonator"])
                n_c = critical_photon_number(res, cfg["resonator"]["static_flux_phi0"])
                sc = scenario_from(cfg, Mechanism.NPDC, epsilon_over_kappa=max(_drive_grid(cfg), default=0.0))
                n = (2 * sc.drive_amplitude / sc.kappa) ** 2 * np.cos(rotation_angle(sc)) ** 2
                level = "ok" if n <= n_c else "warning"
                out.append(Finding(level, "n_c_margin", f"max photons {n:.4g} vs n_c = {n_c:.4g}"))

            guarded("n_c_margin", nc_margin)

    if "quantum" in cfg:
        def truncation() -> None:
            q = cfg["quantum"]
            sc = scenario_from(cfg, Mechanism.IDEAL, epsilon_over_kappa=q["epsilon_over_kappa"], scaled=True)
            n = (2 * sc.drive_amplitude) ** 2 * np.cos(rotation_angle(sc)) ** 2
            level = "ok" if n <= q["fock_cutoff"] / 4 else "warning"
            out.append(Finding(level, "truncation", f"photon estimate {n:.3g} vs fock_cutoff/4 = {q['fock_cutoff'] / 4:g}"))

        guarded("truncation", truncation)
    return out


def _drive_grid(cfg: dict) -> list[float]:
    if "epsilon_over_kappa" in cfg["grid"]:
        return grid_values(cfg["grid"]["epsilon_over_kappa"])
    if "epsilon_over_kappa" in cfg.get("readout", {}):
        return [cfg["readout"]["epsilon_over_kappa"]]
    return []
