"""Fiber-facet surface charge sweeps and endcap compensation solves.

Charge densities are signed and expressed in e/um^2 at every interface.
Facet charge enters the field solver as a fixed source with grounded
conductors responding, so every sweep point is pure superposition on one
basis solution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .constants import ELEMENTARY_CHARGE, UM
from .errors import (
    BracketError,
    ConfinementError,
    DomainError,
    OptimizationError,
    ParameterError,
    SolverError,
)
from .field_solver import BasisSolution, solve_basis
from .geometry import WheelTrapParams, build_wheel_trap, mesh_surface
from .trap_analysis import find_minimum, scan_and_fit
from .trap_model import CA40, DriveConfig, IonSpecies, axis_scan

#: fitted axial frequencies below this floor count as unconfined
STABILITY_FLOOR = 2.0 * np.pi * 5e3  # rad/s


@dataclass(frozen=True)
class ChargeScenario:
    """Homogeneous static charge on each fiber facet, e/um^2 (signed)."""

    sigma_pc: float = 0.0
    sigma_mm: float = 0.0

    def __post_init__(self):
        for name in ("sigma_pc", "sigma_mm"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")


@dataclass(frozen=True)
class ChargeSweepRow:
    sigma: float  # e/um^2 on both facets
    omega_x: float  # rad/s (nan when unstable)
    omega_y: float
    omega_z: float
    stable: bool


@dataclass(frozen=True)
class CompensationResult:
    """Endcap voltages meeting frequency and position targets."""

    v_pc: float
    v_mm: float
    omega_z: float
    z0_um: float
    iterations: int


def sweep_charge_density(
    solution: BasisSolution,
    sigmas,
    drive: DriveConfig | None = None,
    species: IonSpecies = CA40,
) -> list[ChargeSweepRow]:
    """Secular frequencies versus facet charge density (both facets equal).

    The drive defaults to the charge-sweep configuration of the study:
    V_RF = 160 V, V_DC = 0.  Rows that fail to confine are flagged
    unstable instead of aborting the sweep.
    """
    if drive is None:
        drive = DriveConfig(mode="symmetric", v_rf=160.0, v_pc=0.0, v_mm=0.0)
    rows = []
    for sigma in sigmas:
        sigma = float(sigma)
        try:
            r0 = find_minimum(solution, drive, sigma, sigma, species)
            fits = {
                ax: scan_and_fit(solution, drive, ax, r0, sigma, sigma, species)
                for ax in "xyz"
            }
            if any(fits[ax].omega < STABILITY_FLOOR for ax in "xyz"):
                raise ConfinementError("fitted frequency below stability floor")
            rows.append(
                ChargeSweepRow(
                    sigma,
                    fits["x"].omega,
                    fits["y"].omega,
                    fits["z"].omega,
                    stable=True,
                )
            )
        except (ConfinementError, OptimizationError, DomainError):
            rows.append(ChargeSweepRow(sigma, np.nan, np.nan, np.nan, stable=False))
    return rows


def _axial_frequency(solution, drive, sigma_pc, sigma_mm, species, seed=(0.0, 0.0, 0.0)):
    r0 = find_minimum(solution, drive, sigma_pc, sigma_mm, species, seed_um=seed)
    fit = scan_and_fit(solution, drive, "z", r0, sigma_pc, sigma_mm, species)
    return fit.omega, r0


def _curvature_omega_sq(solution, drive, sigma_pc, sigma_mm, species):
    """Axial curvature at the trap center as omega_z^2 (signed, rad^2/s^2).

    Fitted on a fixed window around the origin, so it is exactly linear
    in every voltage and in sigma, including anti-confining cases.
    """
    m = axis_scan(solution, drive, "z", (0, 0, 0), 20.0, 21, sigma_pc, sigma_mm, species)
    c2 = np.polynomial.polynomial.polyfit(m.positions_um, m.phi_trap_ev, 2)[2]
    return 2.0 * c2 * ELEMENTARY_CHARGE / (species.mass_kg * UM**2)


def compensation_voltage(
    solution: BasisSolution,
    sigma: float,
    omega_target: float,
    drive: DriveConfig | None = None,
    species: IonSpecies = CA40,
    bracket: tuple[float, float] = (-100.0, 150.0),
    voltage_tolerance: float = 1e-3,
    frequency_tolerance: float = 2.0 * np.pi * 1e3,
) -> float:
    """Endcap voltage (same on both) restoring the target axial frequency.

    omega_z^2 is monotone and linear in V_DC, so the root of the fixed
    window curvature is solved exactly from two evaluations; secant steps
    on the honest minimize-and-fit frequency then polish the answer to
    the 1 mV / 2pi*1 kHz tolerances.  A bracket without a sign change
    raises BracketError.
    """
    if drive is None:
        drive = DriveConfig(mode="symmetric", v_rf=160.0)

    def curvature(v_dc):
        d = drive.replace(v_pc=v_dc, v_mm=v_dc)
        return _curvature_omega_sq(solution, d, sigma, sigma, species)

    lo, hi = bracket
    target_sq = omega_target**2
    f_lo = curvature(lo) - target_sq
    f_hi = curvature(hi) - target_sq
    if f_lo * f_hi > 0.0:
        raise BracketError(
            f"no compensation voltage in [{lo}, {hi}] V for sigma = {sigma} e/um^2"
        )
    v = lo - f_lo * (hi - lo) / (f_hi - f_lo)  # exact for the linear map

    def fitted_omega(v_dc):
        d = drive.replace(v_pc=v_dc, v_mm=v_dc)
        omega, _ = _axial_frequency(solution, d, sigma, sigma, species)
        return omega

    # secant polish on the fitted frequency, which may differ from the
    # origin curvature when charges displace the minimum
    v_prev, g_prev = None, None
    for _ in range(12):
        g = fitted_omega(v) ** 2 - target_sq
        if abs(np.sqrt(g + target_sq) - omega_target) < frequency_tolerance:
            return float(v)
        if v_prev is None:
            slope = (f_hi - f_lo) / (hi - lo)
        else:
            slope = (g - g_prev) / (v - v_prev)
        v_prev, g_prev = v, g
        v = v - g / slope
        if abs(v - v_prev) < voltage_tolerance:
            return float(v)
    raise OptimizationError(
        f"compensation voltage polish did not converge for sigma = {sigma}"
    )


def endcap_voltages_for(
    solution: BasisSolution,
    sigma_pc: float,
    sigma_mm: float,
    omega_target: float,
    z_target_um: float = 0.0,
    drive: DriveConfig | None = None,
    species: IonSpecies = CA40,
    seed: tuple[float, float] | None = None,
    max_iterations: int = 30,
    omega_tolerance: float = 2.0 * np.pi * 10e3,
    z_tolerance_um: float = 1.0,
) -> CompensationResult:
    """Per-endcap voltages holding both omega_z and z0 at their targets.

    Damped Newton on (V_PC, V_MM) with a numerical Jacobian; residuals
    are (omega_z - target, z0 - target).
    """
    if drive is None:
        drive = DriveConfig(mode="symmetric", v_rf=160.0)

    def curvature_and_field(d):
        """(omega_z^2, E_z) at the target position; both linear in voltages."""
        m = axis_scan(
            solution, d, "z", (0.0, 0.0, z_target_um), 20.0, 21, sigma_pc, sigma_mm, species
        )
        coeffs = np.polynomial.polynomial.polyfit(m.positions_um, m.phi_trap_ev, 2)
        omega_sq = 2.0 * coeffs[2] * ELEMENTARY_CHARGE / (species.mass_kg * UM**2)
        slope_ev_per_um = coeffs[1] + 2.0 * coeffs[2] * z_target_um
        return np.array([omega_sq, slope_ev_per_um])

    if seed is None:
        # exact linear-response seed: one background + two unit-voltage probes
        base = curvature_and_field(drive.replace(v_pc=0.0, v_mm=0.0))
        col_pc = curvature_and_field(drive.replace(v_pc=1.0, v_mm=0.0)) - base
        col_mm = curvature_and_field(drive.replace(v_pc=0.0, v_mm=1.0)) - base
        lin = np.column_stack([col_pc, col_mm])
        try:
            v = np.linalg.solve(lin, np.array([omega_target**2, 0.0]) - base)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                "singular linear response in endcap compensation seed"
            ) from exc
    else:
        v = np.array(seed, dtype=float)

    def residual(vv):
        d = drive.replace(v_pc=vv[0], v_mm=vv[1])
        omega, r0 = _axial_frequency(solution, d, sigma_pc, sigma_mm, species)
        return np.array([omega - omega_target, r0[2] - z_target_um]), omega, r0

    res, omega, r0 = residual(v)
    for iteration in range(1, max_iterations + 1):
        if abs(res[0]) < omega_tolerance and abs(res[1]) < z_tolerance_um:
            return CompensationResult(
                v_pc=float(v[0]),
                v_mm=float(v[1]),
                omega_z=float(omega),
                z0_um=float(r0[2]),
                iterations=iteration - 1,
            )
        jac = np.zeros((2, 2))
        dv = max(0.005, 1e-3 * np.max(np.abs(v)))
        for j in range(2):
            vp = v.copy()
            vp[j] += dv
            res_p, _, _ = residual(vp)
            jac[:, j] = (res_p - res) / dv
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"singular Jacobian in endcap compensation at V = {v}"
            ) from exc
        norm = np.linalg.norm(step)
        cap = max(1.0, 0.2 * np.linalg.norm(v))
        if norm > cap:
            step *= cap / norm
        v = v + step
        res, omega, r0 = residual(v)
    raise OptimizationError(
        f"endcap compensation did not converge in {max_iterations} iterations; "
        f"last V = {v}, residual = ({res[0] / 2 / np.pi:.1f} Hz, {res[1]:.3f} um)"
    )


def length_compensation_sweep(
    params: WheelTrapParams,
    lengths_um,
    sigma_pc: float,
    sigma_mm: float,
    omega_target: float,
    h_um: float,
    drive: DriveConfig | None = None,
    species: IonSpecies = CA40,
    z_target_um: float = 0.0,
) -> list[tuple[float, CompensationResult]]:
    """Compensation voltages over a sweep of endcap separations L.

    Rebuilds the geometry and basis per length; each solve keeps the ion
    at the target position and axial frequency despite the facet charges.
    """
    results = []
    for length in lengths_um:
        p = replace(params, cavity_length_um=float(length))
        mesh = mesh_surface(build_wheel_trap(p), h_um)
        sol = solve_basis(mesh)
        comp = endcap_voltages_for(
            sol, sigma_pc, sigma_mm, omega_target, z_target_um, drive, species
        )
        results.append((float(length), comp))
    return results
