"""Fiber Fabry-Perot mode geometry and ion-cavity QED rates.

Linewidths follow the half-width-at-half-maximum convention throughout:
kappa = pi * FSR / finesse (rad/s), and the atomic decay rates fed in are
amplitude half widths.  The coupling rate comes from the free-space
dipole relation with the cavity-coupled decay channel only,
g0 = sqrt(3 c lambda^2 gamma / (4 pi V)), with standing-wave mode volume
V = (pi/4) w0^2 L.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT, UM
from .errors import ParameterError, StabilityError

#: largest Clebsch-Gordan factor between the D5/2 and P3/2 Zeeman manifolds
ALPHA_D52_P32 = np.sqrt(2.0 / 3.0)

#: amplitude half widths of the two P3/2 decay channels, rad/s
GAMMA_PD = 2.0 * np.pi * 0.67e6  # P3/2 -> D5/2 (cavity-coupled)
GAMMA_PS = 2.0 * np.pi * 10.74e6  # P3/2 -> S1/2


@dataclass(frozen=True)
class CavityGeometry:
    """Two-mirror resonator: length, curvatures, and loss budget.

    Transmissions and other losses are in ppm per round trip; the
    ``other_loss_ppm`` figure (scatter/absorption) is not measured
    directly and is inferred from the finesse.
    """

    length_um: float = 507.0
    roc_1_um: float = 318.0  # MM mirror profile
    roc_2_um: float = 312.0  # PC mirror profile
    wavelength_nm: float = 854.0
    transmission_1_ppm: float = 2.0
    transmission_2_ppm: float = 16.0
    other_loss_ppm: float = 50.3

    def __post_init__(self):
        for name in ("length_um", "roc_1_um", "roc_2_um", "wavelength_nm"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name} must be positive")
        for name in ("transmission_1_ppm", "transmission_2_ppm", "other_loss_ppm"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be non-negative")

    @property
    def g_factors(self) -> tuple[float, float]:
        return (
            1.0 - self.length_um / self.roc_1_um,
            1.0 - self.length_um / self.roc_2_um,
        )

    @property
    def total_loss_ppm(self) -> float:
        return self.transmission_1_ppm + self.transmission_2_ppm + self.other_loss_ppm


@dataclass(frozen=True)
class ModeGeometry:
    g1: float
    g2: float
    waist_um: float
    waist_position_um: float  # from mirror 1 toward mirror 2
    rayleigh_um: float
    marginal: bool  # g1*g2 at 0 or 1 within tolerance

    @property
    def stability(self) -> float:
        return self.g1 * self.g2


@dataclass(frozen=True)
class Transition:
    """Cavity-coupled atomic line: wavelength, HWHM decay rate, CG factor."""

    wavelength_nm: float = 854.0
    gamma: float = GAMMA_PD  # rad/s, amplitude half width
    alpha: float = ALPHA_D52_P32

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ParameterError("transition decay rate gamma must be positive")
        if not self.wavelength_nm > 0.0:
            raise ParameterError("transition wavelength must be positive")


@dataclass(frozen=True)
class CQEDRates:
    """Cavity and coupling rates; all angular frequencies, HWHM widths."""

    fsr_hz: float
    finesse: float
    kappa: float  # rad/s, HWHM
    waist_um: float
    mode_volume_um3: float
    g0: float  # rad/s
    alpha: float
    g: float  # alpha * g0, rad/s
    gamma_pd: float = GAMMA_PD
    gamma_ps: float = GAMMA_PS

    @property
    def kappa_mhz(self) -> float:
        return self.kappa / (2.0 * np.pi) / 1e6

    @property
    def g0_mhz(self) -> float:
        return self.g0 / (2.0 * np.pi) / 1e6

    @property
    def g_mhz(self) -> float:
        return self.g / (2.0 * np.pi) / 1e6


MARGINAL_TOLERANCE = 1e-9


def mode_geometry(cavity: CavityGeometry) -> ModeGeometry:
    """Gaussian mode of a stable two-mirror resonator.

    Raises StabilityError outside 0 <= g1*g2 <= 1; exactly-marginal
    geometries are flagged.
    """
    g1, g2 = cavity.g_factors
    product = g1 * g2
    if product < -MARGINAL_TOLERANCE or product > 1.0 + MARGINAL_TOLERANCE:
        raise StabilityError(
            f"unstable resonator: g1*g2 = {product:.6f} outside [0, 1]"
        )
    marginal = product < MARGINAL_TOLERANCE or product > 1.0 - MARGINAL_TOLERANCE
    length = cavity.length_um
    lam_um = cavity.wavelength_nm * 1e-3
    denom = g1 + g2 - 2.0 * product
    if abs(denom) < 1e-12:
        # symmetric resonator: g1 = g2 = g
        g = g1
        rayleigh = 0.5 * length * np.sqrt((1.0 + g) / max(1.0 - g, 1e-300))
        z1 = length / 2.0
    else:
        rayleigh_sq = length**2 * product * (1.0 - product) / denom**2
        rayleigh = np.sqrt(max(rayleigh_sq, 0.0))
        z1 = length * g2 * (1.0 - g1) / denom
    waist = np.sqrt(rayleigh * lam_um / np.pi)
    return ModeGeometry(
        g1=g1,
        g2=g2,
        waist_um=float(waist),
        waist_position_um=float(z1),
        rayleigh_um=float(rayleigh),
        marginal=marginal,
    )


def cavity_rates(cavity: CavityGeometry) -> tuple[float, float, float]:
    """(FSR in Hz, finesse, kappa in rad/s HWHM) from the loss budget."""
    if not cavity.total_loss_ppm > 0.0:
        raise ParameterError("total round-trip loss must be positive")
    fsr = SPEED_OF_LIGHT / (2.0 * cavity.length_um * UM)
    finesse = 2.0 * np.pi / (cavity.total_loss_ppm * 1e-6)
    kappa = np.pi * fsr / finesse
    return fsr, finesse, kappa


def mode_volume_um3(waist_um: float, length_um: float) -> float:
    """Standing-wave Gaussian mode volume (pi/4) w0^2 L."""
    return np.pi / 4.0 * waist_um**2 * length_um


def coupling_g0(
    wavelength_nm: float, gamma: float, waist_um: float, length_um: float
) -> float:
    """Dipole-mode-volume coupling rate, rad/s; gamma is a HWHM rate."""
    lam = wavelength_nm * 1e-9
    volume = mode_volume_um3(waist_um, length_um) * UM**3
    return float(np.sqrt(3.0 * SPEED_OF_LIGHT * lam**2 * gamma / (4.0 * np.pi * volume)))


def coupling_strength(
    cavity: CavityGeometry, transition: Transition | None = None
) -> CQEDRates:
    """Full rate card: FSR, finesse, kappa, waist, g0, and g = alpha*g0."""
    if transition is None:
        transition = Transition()
    mode = mode_geometry(cavity)
    fsr, finesse, kappa = cavity_rates(cavity)
    g0 = coupling_g0(
        transition.wavelength_nm, transition.gamma, mode.waist_um, cavity.length_um
    )
    return CQEDRates(
        fsr_hz=fsr,
        finesse=finesse,
        kappa=kappa,
        waist_um=mode.waist_um,
        mode_volume_um3=mode_volume_um3(mode.waist_um, cavity.length_um),
        g0=g0,
        alpha=transition.alpha,
        g=transition.alpha * g0,
    )


@dataclass(frozen=True)
class StrongCouplingReport:
    g: float
    kappa: float
    gamma_pd: float
    gamma_ps: float
    g_exceeds_kappa: bool
    g_exceeds_gamma: bool

    @property
    def strong_coupling(self) -> bool:
        return self.g_exceeds_kappa and self.g_exceeds_gamma


def strong_coupling_report(rates: CQEDRates) -> StrongCouplingReport:
    """Ordering of g against kappa and the larger decay channel."""
    return StrongCouplingReport(
        g=rates.g,
        kappa=rates.kappa,
        gamma_pd=rates.gamma_pd,
        gamma_ps=rates.gamma_ps,
        g_exceeds_kappa=bool(rates.g > rates.kappa),
        g_exceeds_gamma=bool(rates.g > rates.gamma_ps),
    )
