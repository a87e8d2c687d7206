"""Equilibrium positions and axial normal modes of linear ion chains.

Chains are axial-only (radial confinement assumed stiff enough for a
linear crystal).  The harmonic source uses closed forms; a sampled
potential map is handled through a cubic spline.  Newton iterations use
analytic Coulomb gradients and Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .constants import COULOMB_CONSTANT, ELEMENTARY_CHARGE, UM
from .errors import OptimizationError, ParameterError, StabilityError
from .trap_model import CA40, IonSpecies, PotentialMap

MAX_IONS = 20


def two_ion_spacing(omega_z: float, species: IonSpecies = CA40) -> float:
    """Equilibrium distance of two ions in a harmonic axial well, in um.

    delta_z = (e^2 / (2 pi eps0 m omega_z^2))^(1/3)
    """
    if not omega_z > 0.0:
        raise ParameterError(f"omega_z must be positive, got {omega_z}")
    q = species.charge_c
    cube = 2.0 * COULOMB_CONSTANT * q**2 / (species.mass_kg * omega_z**2)
    return cube ** (1.0 / 3.0) / UM


def length_scale(omega_z: float, species: IonSpecies = CA40) -> float:
    """Chain length unit l = (e^2/(4 pi eps0 m omega_z^2))^(1/3), in um."""
    return two_ion_spacing(omega_z, species) / 2.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class IonChain:
    """Equilibrated linear chain and the potential it lives in."""

    positions_um: np.ndarray  # ascending along z
    species: IonSpecies
    omega_z: float | None  # harmonic source, rad/s
    potential_map: PotentialMap | None
    gradient_norm: float

    @property
    def n_ions(self) -> int:
        return len(self.positions_um)


class _AxialPotential:
    """Trap energy of one ion versus z, in eV; harmonic or spline-backed."""

    def __init__(self, species, omega_z=None, potential_map=None):
        if (omega_z is None) == (potential_map is None):
            raise ParameterError("provide exactly one of omega_z or potential_map")
        self.species = species
        self.omega_z = omega_z
        if potential_map is not None:
            # the map already stores the ion's potential energy in eV
            self._spline = CubicSpline(
                potential_map.positions_um, potential_map.phi_trap_ev
            )
            self._lo = potential_map.positions_um[0]
            self._hi = potential_map.positions_um[-1]
        else:
            self._spline = None
            self._coeff = (
                0.5 * species.mass_kg * omega_z**2 * UM**2 / ELEMENTARY_CHARGE
            )  # eV per um^2

    def value_grad_curv(self, z_um: np.ndarray):
        if self._spline is None:
            v = self._coeff * z_um**2
            g = 2.0 * self._coeff * z_um
            c = np.full_like(z_um, 2.0 * self._coeff)
            return v, g, c
        if np.any(z_um < self._lo) or np.any(z_um > self._hi):
            raise OptimizationError(
                "chain left the sampled potential window; widen the map"
            )
        return self._spline(z_um), self._spline(z_um, 1), self._spline(z_um, 2)


#: Coulomb energy prefactor in eV*um for charge q (units of e) pairs
def _coulomb_ev_um(species: IonSpecies) -> float:
    q = species.charge_c
    return COULOMB_CONSTANT * q**2 / ELEMENTARY_CHARGE / UM


def equilibrium_positions(
    n_ions: int,
    omega_z: float | None = None,
    potential_map: PotentialMap | None = None,
    species: IonSpecies = CA40,
    max_iterations: int = 200,
    gradient_tolerance: float = 1e-10,
) -> IonChain:
    """Minimize trap-plus-Coulomb energy of an axial chain.

    Newton iterations with analytic gradient/Hessian; converges when the
    gradient norm falls below ``gradient_tolerance`` of the energy scale
    (eV/um units).
    """
    if not 1 <= n_ions <= MAX_IONS:
        raise ParameterError(f"n_ions must be in [1, {MAX_IONS}], got {n_ions}")
    pot = _AxialPotential(species, omega_z, potential_map)
    kc = _coulomb_ev_um(species)

    if omega_z is not None:
        scale = length_scale(omega_z, species)
        center = 0.0
    else:
        zs = potential_map.positions_um
        center = zs[np.argmin(potential_map.phi_trap_ev)]
        _, _, curv = pot.value_grad_curv(np.array([center]))
        omega_eff = np.sqrt(
            2.0 * max(curv[0], 1e-30) * ELEMENTARY_CHARGE / (species.mass_kg * UM**2)
        )
        scale = length_scale(omega_eff, species)
    z = center + scale * (np.arange(n_ions) - (n_ions - 1) / 2.0)

    def gradient_hessian(z_um):
        _, g_trap, c_trap = pot.value_grad_curv(z_um)
        grad = g_trap.copy()
        hess = np.diag(c_trap)
        for i in range(n_ions):
            for j in range(i + 1, n_ions):
                d = z_um[i] - z_um[j]
                f = kc / d**2 * np.sign(d)
                grad[i] -= f
                grad[j] += f
                k = 2.0 * kc / abs(d) ** 3
                hess[i, i] += k
                hess[j, j] += k
                hess[i, j] -= k
                hess[j, i] -= k
        return grad, hess

    for _ in range(max_iterations):
        grad, hess = gradient_hessian(z)
        gnorm = np.linalg.norm(grad)
        if gnorm < gradient_tolerance:
            break
        step = np.linalg.solve(hess, -grad)
        limit = 0.5 * scale
        norm = np.max(np.abs(step))
        if norm > limit:
            step *= limit / norm
        z = np.sort(z + step)
    else:
        raise OptimizationError(
            f"chain equilibrium did not converge: |grad| = {gnorm:.3e} eV/um"
        )
    return IonChain(
        positions_um=np.sort(z),
        species=species,
        omega_z=omega_z,
        potential_map=potential_map,
        gradient_norm=float(gnorm),
    )


def normal_modes(chain: IonChain) -> np.ndarray:
    """Axial normal-mode frequencies (rad/s), ascending.

    Eigenvalues of the mass-scaled Hessian at equilibrium; a negative
    eigenvalue raises StabilityError.
    """
    pot = _AxialPotential(chain.species, chain.omega_z, chain.potential_map)
    kc = _coulomb_ev_um(chain.species)
    z = chain.positions_um
    n = len(z)
    _, _, c_trap = pot.value_grad_curv(z)
    hess = np.diag(c_trap)
    for i in range(n):
        for j in range(i + 1, n):
            k = 2.0 * kc / abs(z[i] - z[j]) ** 3
            hess[i, i] += k
            hess[j, j] += k
            hess[i, j] -= k
            hess[j, i] -= k
    # eV/um^2 -> J/m^2, then omega = sqrt(k/m)
    hess_si = hess * ELEMENTARY_CHARGE / UM**2
    eigvals = np.linalg.eigvalsh(hess_si / chain.species.mass_kg)
    if np.any(eigvals < 0.0):
        raise StabilityError(
            f"chain is unstable: negative mode eigenvalues {eigvals[eigvals < 0]}"
        )
    return np.sqrt(eigvals)
