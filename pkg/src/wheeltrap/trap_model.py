"""Total trapping potential: pseudopotential + DC + fiber surface charge.

Energies are reported in eV (meV in CSV outputs) to match the figures.
The pseudopotential scales the basis field by V_RF/V0 before squaring,
so it is quadratic in the drive amplitude; V0 is 1 V for the RF-GND
configuration and 0.5 V for the symmetric one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constants import (
    ATOMIC_MASS,
    CA40_MASS,
    ELEMENTARY_CHARGE,
    QUBIT_WAVELENGTH,
    UM,
)
from .errors import FitError, ParameterError
from .field_solver import BasisSolution
from .geometry import DC_MM, DC_PC, RF_A, RF_B

RF_GND = "rf-gnd"
SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class IonSpecies:
    """Trapped-ion mass/charge and the optical probe wavelength."""

    mass_kg: float = CA40_MASS
    charge_c: float = ELEMENTARY_CHARGE
    probe_wavelength_m: float = QUBIT_WAVELENGTH

    def __post_init__(self):
        if not self.mass_kg > 0.0:
            raise ParameterError(f"ion mass must be positive, got {self.mass_kg}")
        if self.charge_c == 0.0:
            raise ParameterError("ion charge must be nonzero")

    @classmethod
    def from_amu(cls, mass_u: float, charge_e: float = 1.0, probe_wavelength_m=QUBIT_WAVELENGTH):
        return cls(mass_u * ATOMIC_MASS, charge_e * ELEMENTARY_CHARGE, probe_wavelength_m)


CA40 = IonSpecies()


@dataclass(frozen=True)
class DriveConfig:
    """RF drive mode and amplitudes plus per-endcap DC voltages.

    ``rf-gnd`` drives the RF_A pair and grounds RF_B; ``symmetric``
    drives both pairs 180 degrees out of phase.
    """

    mode: str = SYMMETRIC
    v_rf: float = 160.0
    omega_rf: float = 2.0 * np.pi * 35e6  # rad/s; calibratable, see trap_analysis
    v_pc: float = 0.0
    v_mm: float = 0.0
    comp_voltages: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (RF_GND, SYMMETRIC):
            raise ParameterError(f"unknown drive mode {self.mode!r}")
        if not self.v_rf > 0.0:
            raise ParameterError(f"v_rf must be positive, got {self.v_rf}")
        if not self.omega_rf > 0.0:
            raise ParameterError(f"omega_rf must be positive, got {self.omega_rf}")

    @property
    def v0(self) -> float:
        """Basis voltage the RF field is simulated with."""
        return 1.0 if self.mode == RF_GND else 0.5

    def rf_basis_voltages(self, swap_pairs: bool = False) -> dict[str, float]:
        a, b = (RF_B, RF_A) if swap_pairs else (RF_A, RF_B)
        if self.mode == RF_GND:
            return {a: 1.0}
        return {a: +0.5, b: -0.5}

    def dc_voltages(self) -> dict[str, float]:
        out = {DC_PC: self.v_pc, DC_MM: self.v_mm}
        out.update(self.comp_voltages)
        return out

    def replace(self, **kwargs) -> "DriveConfig":
        fields = {
            "mode": self.mode,
            "v_rf": self.v_rf,
            "omega_rf": self.omega_rf,
            "v_pc": self.v_pc,
            "v_mm": self.v_mm,
            "comp_voltages": dict(self.comp_voltages),
        }
        fields.update(kwargs)
        return DriveConfig(**fields)


class PotentialComponents(NamedTuple):
    phi_rf_ev: float
    phi_dc_ev: float
    phi_sigma_ev: float
    phi_trap_ev: float


def pseudopotential(
    e_field_v_per_m: np.ndarray, drive: DriveConfig, species: IonSpecies = CA40
) -> np.ndarray | float:
    """Time-averaged RF energy (eV) from the basis field at V0.

    Scales the field by V_RF/V0 before squaring, so doubling V_RF
    quadruples the result.
    """
    if not drive.omega_rf > 0.0:
        raise ParameterError("omega_rf must be positive")
    e_arr = np.asarray(e_field_v_per_m, dtype=float)
    e_sq = np.sum((e_arr * (drive.v_rf / drive.v0)) ** 2, axis=-1)
    q = species.charge_c
    joules = q**2 * e_sq / (4.0 * species.mass_kg * drive.omega_rf**2)
    out = joules / ELEMENTARY_CHARGE
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PotentialMap:
    """Sampled potential components (eV) along one axis or point list."""

    axis: str
    positions_um: np.ndarray
    phi_rf_ev: np.ndarray
    phi_dc_ev: np.ndarray
    phi_sigma_ev: np.ndarray

    @property
    def phi_trap_ev(self) -> np.ndarray:
        return self.phi_rf_ev + self.phi_dc_ev + self.phi_sigma_ev

    def to_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(
                [f"{self.axis}_um", "phi_RF_meV", "phi_DC_meV", "phi_sigma_meV", "phi_trap_meV"]
            )
            for i, z in enumerate(self.positions_um):
                writer.writerow(
                    [
                        f"{z:.6f}",
                        f"{1e3 * self.phi_rf_ev[i]:.9g}",
                        f"{1e3 * self.phi_dc_ev[i]:.9g}",
                        f"{1e3 * self.phi_sigma_ev[i]:.9g}",
                        f"{1e3 * self.phi_trap_ev[i]:.9g}",
                    ]
                )


def potential_components_at(
    solution: BasisSolution,
    points_um: np.ndarray,
    drive: DriveConfig,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    species: IonSpecies = CA40,
    swap_rf_pairs: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(phi_RF, phi_DC, phi_sigma) in eV at points given in micrometers."""
    pts = np.atleast_2d(np.asarray(points_um, dtype=float))
    _, e_rf = solution.potential_and_field(
        pts, drive.rf_basis_voltages(swap_rf_pairs), 0.0, 0.0
    )
    phi_rf = pseudopotential(e_rf, drive, species)
    phi_rf = np.atleast_1d(phi_rf)

    volt_scale = species.charge_c / ELEMENTARY_CHARGE
    dc = drive.dc_voltages()
    if any(v != 0.0 for v in dc.values()):
        phi_dc, _ = solution.potential_and_field(pts, dc, 0.0, 0.0)
        phi_dc = phi_dc * volt_scale
    else:
        phi_dc = np.zeros(len(pts))
    if sigma_pc != 0.0 or sigma_mm != 0.0:
        phi_sig, _ = solution.potential_and_field(pts, None, sigma_pc, sigma_mm)
        phi_sig = phi_sig * volt_scale
    else:
        phi_sig = np.zeros(len(pts))
    return phi_rf, phi_dc, phi_sig


def total_potential(
    solution: BasisSolution,
    point_um,
    drive: DriveConfig,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    species: IonSpecies = CA40,
) -> PotentialComponents:
    """Eq.-style decomposition phi_trap = phi_RF + phi_DC + phi_sigma (eV)."""
    phi_rf, phi_dc, phi_sig = potential_components_at(
        solution, np.asarray(point_um, dtype=float).reshape(1, 3),
        drive, sigma_pc, sigma_mm, species,
    )
    return PotentialComponents(
        float(phi_rf[0]),
        float(phi_dc[0]),
        float(phi_sig[0]),
        float(phi_rf[0] + phi_dc[0] + phi_sig[0]),
    )


def axis_scan(
    solution: BasisSolution,
    drive: DriveConfig,
    axis: str = "z",
    center_um=(0.0, 0.0, 0.0),
    span_um: float = 20.0,
    n_samples: int = 41,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    species: IonSpecies = CA40,
) -> PotentialMap:
    """Sample the potential components along one Cartesian axis."""
    k = "xyz".index(axis)
    offsets = np.linspace(-span_um, span_um, n_samples)
    pts = np.tile(np.asarray(center_um, dtype=float), (n_samples, 1))
    pts[:, k] += offsets
    phi_rf, phi_dc, phi_sig = potential_components_at(
        solution, pts, drive, sigma_pc, sigma_mm, species
    )
    return PotentialMap(axis, pts[:, k], phi_rf, phi_dc, phi_sig)


class MathieuParameters(NamedTuple):
    q: np.ndarray  # (qx, qy, qz)
    a: np.ndarray  # (ax, ay, az)


def _axis_curvatures(solution, voltages, center_um, step_um=1.0):
    """5-point second derivatives of a voltage-basis potential, V/m^2."""
    pts = [np.asarray(center_um, dtype=float)]
    for k in range(3):
        for off in (-2, -1, 1, 2):
            p = np.array(center_um, dtype=float)
            p[k] += off * step_um
            pts.append(p)
    phi, _ = solution.potential_and_field(np.array(pts), voltages, 0.0, 0.0)
    h = step_um * UM
    curv = np.empty(3)
    for k in range(3):
        fm2, fm1, fp1, fp2 = phi[1 + 4 * k : 5 + 4 * k]
        curv[k] = (-fp2 + 16 * fp1 - 30 * phi[0] + 16 * fm1 - fm2) / (12 * h**2)
    return curv


def mathieu_parameters(
    solution: BasisSolution,
    drive: DriveConfig,
    species: IonSpecies = CA40,
    center_um=(0.0, 0.0, 0.0),
    fit_window_um: float = 10.0,
    max_relative_residual: float = 0.05,
) -> MathieuParameters:
    """Lowest-order stability parameters from local field curvatures.

    The RF basis potential is checked for quadratic behavior over the
    fit window; a large residual raises FitError.
    """
    rf_volts = drive.rf_basis_voltages()
    for k, axis in enumerate("xyz"):
        offs = np.linspace(-fit_window_um, fit_window_um, 9)
        pts = np.tile(np.asarray(center_um, dtype=float), (9, 1))
        pts[:, k] += offs
        phi, _ = solution.potential_and_field(pts, rf_volts, 0.0, 0.0)
        coeffs = np.polynomial.polynomial.polyfit(offs, phi, 2)
        resid = phi - np.polynomial.polynomial.polyval(offs, coeffs)
        scale = max(np.ptp(phi), abs(phi[4]) * 1e-9, 1e-30)
        if np.sqrt(np.mean(resid**2)) > max_relative_residual * scale:
            raise FitError(
                f"RF basis potential not quadratic along {axis} over "
                f"+/-{fit_window_um} um"
            )

    c_rf = _axis_curvatures(solution, rf_volts, center_um)
    q_ion, m = species.charge_c, species.mass_kg
    q_params = 2.0 * q_ion * (drive.v_rf / drive.v0) * c_rf / (m * drive.omega_rf**2)

    dc = drive.dc_voltages()
    if any(v != 0.0 for v in dc.values()):
        c_dc = _axis_curvatures(solution, dc, center_um)
    else:
        c_dc = np.zeros(3)
    a_params = 4.0 * q_ion * c_dc / (m * drive.omega_rf**2)
    return MathieuParameters(q=q_params, a=a_params)
