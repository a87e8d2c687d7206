"""Command-line interface: one config file per run, deterministic outputs.

Every output file starts with a header line carrying the toolkit
version, the hash of the effective configuration, the command, and any
flag overrides, so figure recipes are reproducible byte for byte.
Exit codes map error families: 2 config, 3 parameters/resolution,
4 solver/resources, 5 domain, 6 fits, 7 optimization/bracketing,
8 stability, 9 regime.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    RunConfig,
    apply_overrides,
    config_hash,
    parse_config,
)
from .cavity_qed import coupling_strength, strong_coupling_report
from .errors import (
    BracketError,
    ConfigError,
    DomainError,
    FitError,
    OptimizationError,
    ParameterError,
    RegimeError,
    ResolutionError,
    ResourceError,
    SolverError,
    StabilityError,
    WheelTrapError,
)
from .field_solver import solve_basis
from .geometry import build_wheel_trap, mesh_surface
from .ion_chain import equilibrium_positions, normal_modes
from .surface_charges import (
    compensation_voltage,
    endcap_voltages_for,
    length_compensation_sweep,
    sweep_charge_density,
)
from .thermometry import (
    HeatingSeries,
    RabiTrace,
    fit_heating_rate,
    fit_thermal_rabi,
)
from .trap_analysis import find_minimum, scan_and_fit
from .trap_model import axis_scan

EXIT_CODES = [
    (ConfigError, 2),
    (ResolutionError, 3),
    (ParameterError, 3),
    (ResourceError, 4),
    (SolverError, 4),
    (DomainError, 5),
    (FitError, 6),
    (BracketError, 7),
    (OptimizationError, 7),
    (StabilityError, 8),
    (RegimeError, 9),
]

OUTPUT_DIR_ENV = "WHEELTRAP_OUTDIR"


def _header(cfg: RunConfig, command: str, overrides: list[str]) -> str:
    extra = f" overrides={','.join(overrides)}" if overrides else ""
    return f"wheeltrap v{__version__} command={command} config={config_hash(cfg)}{extra}"


def _meta(cfg: RunConfig, command: str, overrides: list[str]) -> dict:
    return {
        "toolkit": f"wheeltrap v{__version__}",
        "command": command,
        "config_hash": config_hash(cfg),
        "overrides": list(overrides),
    }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: str, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def _solve_from_config(cfg: RunConfig):
    mesh = mesh_surface(build_wheel_trap(cfg.geometry), cfg.mesh.h_um)
    solution = solve_basis(mesh, max_panels=cfg.mesh.max_panels)
    return mesh, solution


def cmd_solve(cfg, outdir, header, meta):
    mesh, solution = _solve_from_config(cfg)
    mesh_path = outdir / "mesh.csv"
    mesh.to_csv(mesh_path)
    diag = dict(solution.diagnostics)
    diag["meta"] = meta
    diag_path = outdir / "solver_diagnostics.json"
    _write_json(diag_path, diag)
    return [mesh_path, diag_path]


def cmd_map(cfg, outdir, header, meta):
    _, solution = _solve_from_config(cfg)
    drive = cfg.drive.to_drive()
    species = cfg.species.to_species()
    pmap = axis_scan(
        solution,
        drive,
        cfg.map.axis,
        (0.0, 0.0, 0.0),
        cfg.map.span_um,
        cfg.map.steps,
        cfg.charges.sigma_pc,
        cfg.charges.sigma_mm,
        species,
    )
    path = outdir / f"potential_{cfg.map.axis}.csv"
    pmap.to_csv(path, header_comment=header)
    return [path]


def cmd_fit(cfg, outdir, header, meta):
    _, solution = _solve_from_config(cfg)
    drive = cfg.drive.to_drive()
    species = cfg.species.to_species()
    sp, sm = cfg.charges.sigma_pc, cfg.charges.sigma_mm
    r0 = find_minimum(solution, drive, sp, sm, species)
    payload = {"meta": meta, "minimum_um": [float(v) for v in r0], "fits": {}}
    for ax in "xyz":
        fit = scan_and_fit(solution, drive, ax, r0, sp, sm, species)
        payload["fits"][ax] = {
            "frequency_mhz": fit.frequency_mhz,
            "frequency_std_mhz": fit.omega_std / (2.0 * np.pi) / 1e6,
            "r0_um": fit.r0_um,
            "r0_std_um": fit.r0_std_um,
            "phi0_mev": 1e3 * fit.phi0_ev,
            "residual_rms_mev": 1e3 * fit.residual_rms_ev,
        }
    path = outdir / "harmonic_fits.json"
    _write_json(path, payload)
    return [path]


def cmd_charge_sweep(cfg, outdir, header, meta):
    _, solution = _solve_from_config(cfg)
    drive = cfg.drive.to_drive()
    species = cfg.species.to_species()
    cs = cfg.charge_sweep
    if cs.spacing == "log":
        if cs.sigma_start <= 0.0 or cs.sigma_stop <= 0.0:
            raise ConfigError("log spacing needs positive charge_sweep bounds")
        sigmas = np.geomspace(cs.sigma_start, cs.sigma_stop, cs.steps)
    else:
        sigmas = np.linspace(cs.sigma_start, cs.sigma_stop, cs.steps)
    if cs.mode == "frequencies":
        rows = sweep_charge_density(solution, sigmas, drive, species)
        path = outdir / "charge_sweep.csv"
        _write_csv(
            path,
            header,
            ["sigma_e_per_um2", "omega_x_mhz", "omega_y_mhz", "omega_z_mhz", "stable"],
            [
                (
                    r.sigma,
                    r.omega_x / 2e6 / np.pi,
                    r.omega_y / 2e6 / np.pi,
                    r.omega_z / 2e6 / np.pi,
                    int(r.stable),
                )
                for r in rows
            ],
        )
        return [path]
    target = 2.0 * np.pi * cs.omega_target_mhz * 1e6
    rows = [(float(s), compensation_voltage(solution, float(s), target, drive, species))
            for s in sigmas]
    path = outdir / "compensation_voltage.csv"
    _write_csv(path, header, ["sigma_e_per_um2", "v_dc_volts"], rows)
    return [path]


def cmd_compensate(cfg, outdir, header, meta):
    drive = cfg.drive.to_drive()
    species = cfg.species.to_species()
    comp_cfg = cfg.compensate
    target = 2.0 * np.pi * comp_cfg.omega_target_mhz * 1e6
    sp, sm = cfg.charges.sigma_pc, cfg.charges.sigma_mm
    if comp_cfg.lengths_um:
        results = length_compensation_sweep(
            cfg.geometry,
            comp_cfg.lengths_um,
            sp,
            sm,
            target,
            cfg.mesh.h_um,
            drive,
            species,
            comp_cfg.z_target_um,
        )
        path = outdir / "length_compensation.csv"
        _write_csv(
            path,
            header,
            ["length_um", "v_pc_volts", "v_mm_volts", "omega_z_mhz", "z0_um"],
            [
                (length, c.v_pc, c.v_mm, c.omega_z / 2e6 / np.pi, c.z0_um)
                for length, c in results
            ],
        )
        return [path]
    _, solution = _solve_from_config(cfg)
    comp = endcap_voltages_for(
        solution, sp, sm, target, comp_cfg.z_target_um, drive, species
    )
    path = outdir / "compensation.json"
    _write_json(
        path,
        {
            "meta": meta,
            "v_pc_volts": comp.v_pc,
            "v_mm_volts": comp.v_mm,
            "omega_z_mhz": comp.omega_z / 2e6 / np.pi,
            "z0_um": comp.z0_um,
            "iterations": comp.iterations,
        },
    )
    return [path]


def cmd_chain(cfg, outdir, header, meta):
    species = cfg.species.to_species()
    omega_z = 2.0 * np.pi * cfg.chain.omega_z_mhz * 1e6
    chain = equilibrium_positions(cfg.chain.n_ions, omega_z=omega_z, species=species)
    modes = normal_modes(chain)
    path = outdir / "chain.json"
    _write_json(
        path,
        {
            "meta": meta,
            "n_ions": chain.n_ions,
            "positions_um": [float(z) for z in chain.positions_um],
            "modes_mhz": [float(m / 2e6 / np.pi) for m in modes],
        },
    )
    return [path]


def cmd_cavity(cfg, outdir, header, meta):
    rates = coupling_strength(cfg.cavity.to_cavity(), cfg.cavity.to_transition())
    report = strong_coupling_report(rates)
    path = outdir / "cavity_rates.json"
    _write_json(
        path,
        {
            "meta": meta,
            "fsr_ghz": rates.fsr_hz / 1e9,
            "finesse": rates.finesse,
            "kappa_mhz_hwhm": rates.kappa_mhz,
            "w0_um": rates.waist_um,
            "mode_volume_um3": rates.mode_volume_um3,
            "g0_mhz": rates.g0_mhz,
            "g_mhz": rates.g_mhz,
            "alpha": rates.alpha,
            "gamma_pd_mhz_hwhm": rates.gamma_pd / 2e6 / np.pi,
            "gamma_ps_mhz_hwhm": rates.gamma_ps / 2e6 / np.pi,
            "strong_coupling": {
                "g_exceeds_kappa": report.g_exceeds_kappa,
                "g_exceeds_gamma_ps": report.g_exceeds_gamma,
            },
            "note": "other_loss_ppm is inferred from the finesse, not measured",
        },
    )
    return [path]


def cmd_thermo_fit(cfg, outdir, header, meta):
    th = cfg.thermo
    if not th.input_csv:
        raise ConfigError("thermo.input_csv is required for thermo-fit")
    data = np.loadtxt(th.input_csv, delimiter=",", comments="#", skiprows=1)
    if th.kind == "heating":
        series = HeatingSeries(data[:, 0], data[:, 1], data[:, 2])
        fit = fit_heating_rate(series)
        payload = {
            "meta": meta,
            "rate_phonons_per_s": fit.rate_per_s,
            "rate_std": fit.rate_std,
            "intercept": fit.intercept,
            "intercept_std": fit.intercept_std,
            "chi2_reduced": fit.chi2_reduced,
        }
    else:
        shots = int(data[0, 2]) if data.shape[1] > 2 else 100
        trace = RabiTrace(data[:, 0], data[:, 1], shots)
        fit = fit_thermal_rabi(trace, th.eta)
        payload = {
            "meta": meta,
            "omega0_khz": fit.omega0 / 2e3 / np.pi,
            "omega0_std_khz": fit.omega0_std / 2e3 / np.pi,
            "nbar": fit.nbar,
            "nbar_std": fit.nbar_std,
            "chi2_reduced": fit.chi2_reduced,
        }
    path = outdir / "thermo_fit.json"
    _write_json(path, payload)
    return [path]


COMMANDS = {
    "solve": cmd_solve,
    "map": cmd_map,
    "fit": cmd_fit,
    "charge-sweep": cmd_charge_sweep,
    "compensate": cmd_compensate,
    "chain": cmd_chain,
    "cavity": cmd_cavity,
    "thermo-fit": cmd_thermo_fit,
}


def run(command: str, config_text: str, overrides: list[str] | None = None,
        output_dir: str | None = None) -> list[Path]:
    """Dispatch one command; returns the list of files written."""
    overrides = overrides or []
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if overrides:
        config_text = apply_overrides(config_text, overrides)
    cfg = parse_config(config_text)
    outdir = Path(
        output_dir
        or os.environ.get(OUTPUT_DIR_ENV)
        or cfg.output_dir
    )
    outdir.mkdir(parents=True, exist_ok=True)
    header = _header(cfg, command, overrides)
    meta = _meta(cfg, command, overrides)
    return COMMANDS[command](cfg, outdir, header, meta)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wheeltrap",
        description="Ion-trap/fiber-cavity simulation toolkit",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("-c", "--config", required=True, help="YAML config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a scalar config field (flag wins, recorded in headers)",
    )
    parser.add_argument("--output-dir", default=None, help="override output directory")
    args = parser.parse_args(argv)

    try:
        config_text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        written = run(args.command, config_text, args.overrides, args.output_dir)
    except WheelTrapError as exc:
        for err_type, code in EXIT_CODES:
            if isinstance(exc, err_type):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
