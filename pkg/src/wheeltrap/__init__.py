"""Desk-scale simulation toolkit for a fiber-cavity wheel trap.

Boundary-element trap potentials, pseudopotentials under two RF drive
configurations, fiber surface-charge perturbations and compensation,
micromotion metrics, ion-chain structure, fiber-cavity QED rates, and
motional thermometry fits.
"""

__version__ = "0.1.0"

from .cavity_qed import (
    CavityGeometry,
    CQEDRates,
    Transition,
    cavity_rates,
    coupling_strength,
    mode_geometry,
    strong_coupling_report,
)
from .field_solver import BasisSolution, FieldSample, evaluate, solve_basis
from .geometry import (
    ElectrodePrimitive,
    PanelMesh,
    WheelTrapParams,
    build_wheel_trap,
    mesh_surface,
)
from .ion_chain import (
    IonChain,
    equilibrium_positions,
    normal_modes,
    two_ion_spacing,
)
from .surface_charges import (
    ChargeScenario,
    CompensationResult,
    compensation_voltage,
    endcap_voltages_for,
    sweep_charge_density,
)
from .thermometry import (
    HeatingSeries,
    RabiTrace,
    fit_heating_rate,
    fit_thermal_rabi,
    modulation_index_from_rabi,
    sideband_ratio_to_nbar,
    thermal_rabi,
)
from .trap_analysis import (
    HarmonicFit,
    MicromotionMetrics,
    calibrate_rf_frequency,
    displacement_per_volt,
    find_minimum,
    fit_harmonic,
    modulation_index,
    scan_and_fit,
    secular_frequencies,
)
from .trap_model import (
    CA40,
    DriveConfig,
    IonSpecies,
    PotentialMap,
    axis_scan,
    mathieu_parameters,
    pseudopotential,
    total_potential,
)

__all__ = [
    "BasisSolution",
    "CA40",
    "CQEDRates",
    "CavityGeometry",
    "ChargeScenario",
    "CompensationResult",
    "DriveConfig",
    "ElectrodePrimitive",
    "FieldSample",
    "HarmonicFit",
    "HeatingSeries",
    "IonChain",
    "IonSpecies",
    "MicromotionMetrics",
    "PanelMesh",
    "PotentialMap",
    "RabiTrace",
    "Transition",
    "WheelTrapParams",
    "axis_scan",
    "build_wheel_trap",
    "calibrate_rf_frequency",
    "cavity_rates",
    "compensation_voltage",
    "coupling_strength",
    "displacement_per_volt",
    "endcap_voltages_for",
    "equilibrium_positions",
    "evaluate",
    "find_minimum",
    "fit_harmonic",
    "fit_heating_rate",
    "fit_thermal_rabi",
    "mathieu_parameters",
    "mesh_surface",
    "mode_geometry",
    "modulation_index",
    "modulation_index_from_rabi",
    "normal_modes",
    "pseudopotential",
    "scan_and_fit",
    "secular_frequencies",
    "sideband_ratio_to_nbar",
    "solve_basis",
    "strong_coupling_report",
    "sweep_charge_density",
    "thermal_rabi",
    "total_potential",
    "two_ion_spacing",
]
