"""Physical constants (CODATA 2018) and unit conversions.

All energies reported by the toolkit are converted through this single
table so that eV/meV figures stay consistent across modules.
"""

import numpy as np

ELEMENTARY_CHARGE = 1.602176634e-19  # C
ATOMIC_MASS = 1.66053906660e-27  # kg
EPSILON_0 = 8.8541878128e-12  # F/m
SPEED_OF_LIGHT = 299792458.0  # m/s

COULOMB_CONSTANT = 1.0 / (4.0 * np.pi * EPSILON_0)  # m/F

UM = 1e-6  # meters per micrometer

# 1 e/um^2 expressed in C/m^2 (surface-charge unit used at all interfaces)
E_PER_UM2 = ELEMENTARY_CHARGE / UM**2

CA40_MASS = 40.0 * ATOMIC_MASS  # kg
QUBIT_WAVELENGTH = 729e-9  # m, S1/2 -> D5/2 probe
