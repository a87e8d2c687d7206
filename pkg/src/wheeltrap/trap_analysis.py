"""Ion position, secular frequencies, micromotion, and calibration sweeps.

Harmonic fits use the model 0.5*m*omega^2*(r - r0)^2 + phi0 in eV over a
configurable window around the minimum.  The minimizer is quasi-Newton on
the smooth superposed potential with 0.1 um central-difference gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .constants import ELEMENTARY_CHARGE, UM
from .errors import ConfinementError, FitError, OptimizationError, ParameterError
from .field_solver import BasisSolution, solve_basis
from .geometry import WheelTrapParams, build_wheel_trap, mesh_surface
from .trap_model import (
    CA40,
    DriveConfig,
    IonSpecies,
    PotentialMap,
    axis_scan,
    potential_components_at,
)

GRADIENT_STEP_UM = 0.1
GRADIENT_TOL_EV_PER_UM = 1e-6
FIT_SPAN_UM = 20.0
FIT_SAMPLES = 41


@dataclass(frozen=True)
class HarmonicFit:
    """Result of a 1D harmonic fit along one axis."""

    axis: str
    omega: float  # rad/s
    r0_um: float
    phi0_ev: float
    omega_std: float
    r0_std_um: float
    phi0_std_ev: float
    residual_rms_ev: float

    @property
    def frequency_mhz(self) -> float:
        return self.omega / (2.0 * np.pi) / 1e6


@dataclass(frozen=True)
class MicromotionMetrics:
    """Residual RF field at the ion and the modulation index it causes."""

    e_residual_v_per_m: np.ndarray  # RF field amplitude vector
    amplitude_m: np.ndarray  # driven-motion amplitude per axis
    beta: float
    k_unit: np.ndarray

    @property
    def e_residual_magnitude(self) -> float:
        return float(np.linalg.norm(self.e_residual_v_per_m))


def _trap_energy_fn(solution, drive, sigma_pc, sigma_mm, species):
    def total(points_um):
        phi_rf, phi_dc, phi_sig = potential_components_at(
            solution, points_um, drive, sigma_pc, sigma_mm, species
        )
        return phi_rf + phi_dc + phi_sig

    return total


_STENCIL_PAIRS = [(0, 1), (0, 2), (1, 2)]


def _grad_hess_stencil(x, step):
    """19-point stencil around x: value, gradient, and full Hessian."""
    pts = [x.copy()]
    for k in range(3):
        for s in (+1, -1):
            p = x.copy()
            p[k] += s * step
            pts.append(p)
    for i, j in _STENCIL_PAIRS:
        for si, sj in ((+1, +1), (+1, -1), (-1, +1), (-1, -1)):
            p = x.copy()
            p[i] += si * step
            p[j] += sj * step
            pts.append(p)
    return np.array(pts)


def minimize_potential(
    energy_fn,
    seed_um=(0.0, 0.0, 0.0),
    gradient_step_um: float = GRADIENT_STEP_UM,
    gradient_tol: float = GRADIENT_TOL_EV_PER_UM,
    max_iterations: int = 60,
    max_step_um: float = 50.0,
) -> np.ndarray:
    """Damped Newton minimum of a scalar field sampled in micrometers.

    ``energy_fn`` maps an (n, 3) array of points (um) to energies (eV);
    each iteration evaluates one batched 19-point stencil for the
    gradient and Hessian.  Flat directions are Tikhonov-regularized so
    potentials unconfined along one axis still converge transversely.
    """
    x = np.asarray(seed_um, dtype=float).copy()
    h = gradient_step_um
    trace = []
    for iteration in range(max_iterations):
        e = energy_fn(_grad_hess_stencil(x, h))
        grad = np.array([(e[1 + 2 * k] - e[2 + 2 * k]) / (2 * h) for k in range(3)])
        hess = np.zeros((3, 3))
        for k in range(3):
            hess[k, k] = (e[1 + 2 * k] - 2 * e[0] + e[2 + 2 * k]) / h**2
        for m, (i, j) in enumerate(_STENCIL_PAIRS):
            base = 7 + 4 * m
            hess[i, j] = hess[j, i] = (
                e[base] - e[base + 1] - e[base + 2] + e[base + 3]
            ) / (4 * h**2)

        grad_norm = float(np.linalg.norm(grad))
        trace.append((x.copy(), grad_norm))
        if grad_norm < gradient_tol:
            return x

        eigvals = np.linalg.eigvalsh(hess)
        floor = max(1e-3 * abs(eigvals).max(), 1e-12)
        if eigvals[0] < floor:
            hess = hess + (floor - eigvals[0]) * np.eye(3)
        step = np.linalg.solve(hess, -grad)
        norm = np.linalg.norm(step)
        if norm > max_step_um:
            step *= max_step_um / norm
        x = x + step

    raise OptimizationError(
        "potential minimization did not converge: |grad| = "
        f"{trace[-1][1]:.3e} eV/um after {max_iterations} iterations; "
        f"trace tail {[(p.round(3).tolist(), f'{g:.2e}') for p, g in trace[-3:]]}"
    )


def find_minimum(
    solution: BasisSolution,
    drive: DriveConfig,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    species: IonSpecies = CA40,
    seed_um=(0.0, 0.0, 0.0),
) -> np.ndarray:
    """Local minimizer of the total trap potential, in micrometers."""
    fn = _trap_energy_fn(solution, drive, sigma_pc, sigma_mm, species)
    return minimize_potential(fn, seed_um)


def fit_harmonic(samples: PotentialMap, species: IonSpecies = CA40) -> HarmonicFit:
    """Least-squares harmonic fit of a sampled axis potential.

    Requires at least 7 samples spanning at least +/-10 um.  Raises
    ConfinementError when the local curvature is negative.
    """
    r = np.asarray(samples.positions_um, dtype=float)
    phi = np.asarray(samples.phi_trap_ev, dtype=float)
    if len(r) < 7:
        raise ParameterError(f"need >= 7 samples for a harmonic fit, got {len(r)}")
    if np.ptp(r) < 20.0 - 1e-9:
        raise ParameterError(
            f"samples must span at least +/-10 um, got {np.ptp(r):.3g} um total"
        )

    # the harmonic model is an exact reparametrization of a quadratic
    # polynomial, so the fit is linear least squares with closed-form
    # covariance; (omega, r0, phi0) follow by error propagation
    design = np.column_stack([np.ones_like(r), r, r**2])
    gram = design.T @ design
    try:
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"harmonic fit ill-conditioned along {samples.axis}") from exc
    beta = gram_inv @ (design.T @ phi)
    residual = phi - design @ beta
    rms = float(np.sqrt(np.mean(residual**2)))
    dof = max(len(r) - 3, 1)
    cov_beta = gram_inv * (residual @ residual / dof)

    b0, b1, b2 = beta
    if b2 <= 0.0:
        raise ConfinementError(
            f"negative curvature along {samples.axis}: potential is anti-confining"
        )
    c2 = b2
    r0 = -b1 / (2.0 * b2)
    phi0 = b0 - b1**2 / (4.0 * b2)
    jac = np.array(
        [
            [0.0, 0.0, 1.0],
            [0.0, -1.0 / (2.0 * b2), b1 / (2.0 * b2**2)],
            [1.0, -b1 / (2.0 * b2), b1**2 / (4.0 * b2**2)],
        ]
    )
    cov = jac @ cov_beta @ jac.T
    std_c2, std_r0, std_phi0 = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    m = species.mass_kg
    omega = np.sqrt(2.0 * c2 * ELEMENTARY_CHARGE / m) / UM
    return HarmonicFit(
        axis=samples.axis,
        omega=omega,
        r0_um=r0,
        phi0_ev=phi0,
        omega_std=0.5 * omega * std_c2 / c2,
        r0_std_um=std_r0,
        phi0_std_ev=std_phi0,
        residual_rms_ev=rms,
    )


def scan_and_fit(
    solution: BasisSolution,
    drive: DriveConfig,
    axis: str,
    center_um,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    species: IonSpecies = CA40,
    span_um: float = FIT_SPAN_UM,
    n_samples: int = FIT_SAMPLES,
) -> HarmonicFit:
    """Convenience: sample around a point along one axis, then fit."""
    samples = axis_scan(
        solution, drive, axis, center_um, span_um, n_samples, sigma_pc, sigma_mm, species
    )
    return fit_harmonic(samples, species)


def secular_frequencies(
    solution: BasisSolution,
    drive: DriveConfig,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    species: IonSpecies = CA40,
    seed_um=(0.0, 0.0, 0.0),
) -> tuple[np.ndarray, dict[str, HarmonicFit]]:
    """Minimum position plus harmonic fits along all three axes."""
    r0 = find_minimum(solution, drive, sigma_pc, sigma_mm, species, seed_um)
    fits = {
        axis: scan_and_fit(solution, drive, axis, r0, sigma_pc, sigma_mm, species)
        for axis in "xyz"
    }
    return r0, fits


def modulation_index(
    solution: BasisSolution,
    drive: DriveConfig,
    ion_position_um,
    species: IonSpecies = CA40,
    k_direction=(0.0, 0.0, 1.0),
) -> MicromotionMetrics:
    """Micromotion modulation index from the residual RF field.

    The driven-motion amplitude is u_i = q E_i / (m Omega^2) per axis;
    beta = |k . u| for the probe wavevector (729 nm qubit by default).
    """
    k_unit = np.asarray(k_direction, dtype=float)
    norm = np.linalg.norm(k_unit)
    if norm == 0.0:
        raise ParameterError("probe wavevector direction must be nonzero")
    k_unit = k_unit / norm
    pts = np.asarray(ion_position_um, dtype=float).reshape(1, 3)
    _, e_rf = solution.potential_and_field(pts, drive.rf_basis_voltages(), 0.0, 0.0)
    e_res = e_rf[0] * (drive.v_rf / drive.v0)
    u = species.charge_c * e_res / (species.mass_kg * drive.omega_rf**2)
    k_vec = 2.0 * np.pi / species.probe_wavelength_m * k_unit
    return MicromotionMetrics(
        e_residual_v_per_m=e_res,
        amplitude_m=u,
        beta=float(abs(np.dot(k_vec, u))),
        k_unit=k_unit,
    )


def displacement_per_volt(
    solution: BasisSolution,
    drive: DriveConfig,
    species: IonSpecies = CA40,
    dv: float = 0.2,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
) -> float:
    """Axial minimum displacement per volt of differential endcap voltage.

    Central difference at fixed mean endcap voltage; returns um/V
    (signed, per volt of V_PC - V_MM).
    """
    if dv == 0.0:
        return 0.0
    mean = 0.5 * (drive.v_pc + drive.v_mm)
    base = find_minimum(solution, drive, sigma_pc, sigma_mm, species)
    z_vals = []
    for sign in (+1.0, -1.0):
        stepped = drive.replace(
            v_pc=mean + sign * dv / 2.0, v_mm=mean - sign * dv / 2.0
        )
        r0 = find_minimum(solution, stepped, sigma_pc, sigma_mm, species, seed_um=base)
        z_vals.append(r0[2])
    return (z_vals[0] - z_vals[1]) / (2.0 * dv)


def calibrate_rf_frequency(
    solution: BasisSolution,
    drive: DriveConfig,
    target_omega_x: float,
    species: IonSpecies = CA40,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
    relative_tolerance: float = 1e-6,
) -> float:
    """One-time RF drive frequency calibration against a radial target.

    The fitted radial frequency obeys omega_x^2 = C/Omega^2 - D exactly
    (pseudopotential curvature scales as 1/Omega^2, DC defocusing is
    constant), so two fits determine C and D; a bracketing polish
    absorbs any window effects.  Returns the calibrated Omega_rf.
    """

    def omega_x_at(omega_rf):
        d = drive.replace(omega_rf=omega_rf)
        r0 = find_minimum(solution, d, sigma_pc, sigma_mm, species)
        return scan_and_fit(solution, d, "x", r0, sigma_pc, sigma_mm, species).omega

    w1, w2 = drive.omega_rf, 1.5 * drive.omega_rf
    f1, f2 = omega_x_at(w1), omega_x_at(w2)
    c_const = (f1**2 - f2**2) / (1.0 / w1**2 - 1.0 / w2**2)
    d_const = c_const / w1**2 - f1**2
    arg = c_const / (target_omega_x**2 + d_const)
    if not arg > 0.0:
        raise OptimizationError(
            f"radial target {target_omega_x / 2e6 / np.pi:.3f} MHz unreachable "
            f"for this geometry/drive"
        )
    omega_star = np.sqrt(arg)
    mismatch = omega_x_at(omega_star) / target_omega_x - 1.0
    if abs(mismatch) > relative_tolerance:
        omega_star = brentq(
            lambda w: omega_x_at(w) - target_omega_x,
            0.8 * omega_star,
            1.2 * omega_star,
            rtol=relative_tolerance,
        )
    return float(omega_star)


def fiber_displacement_sweep(
    params: WheelTrapParams,
    offsets_um,
    h_um: float,
    drive: DriveConfig,
    species: IonSpecies = CA40,
    sigma_pc: float = 0.0,
    sigma_mm: float = 0.0,
) -> list[tuple[float, np.ndarray]]:
    """Ion position for each transverse fiber/endcap offset delta_f.

    Rebuilds geometry, mesh and basis per offset; returns
    [(delta_f_um, r0_um), ...] in the given offset order.
    """
    results = []
    for delta in offsets_um:
        p = replace(params, fiber_offset_um=float(delta))
        mesh = mesh_surface(build_wheel_trap(p), h_um)
        sol = solve_basis(mesh)
        r0 = find_minimum(sol, drive, sigma_pc, sigma_mm, species)
        results.append((float(delta), r0))
    return results
