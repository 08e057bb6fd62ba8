"""Physical constants and unit conversions.

Energies enter the package in wavenumbers (cm^-1) and are converted to
angular frequency in rad/ps before any dynamics is computed, which removes
hbar from every equation of motion.
"""

import math

#: Boltzmann constant in cm^-1 / K.
KB_CM_PER_K = 0.6950348

#: Speed of light in cm / ps.
SPEED_OF_LIGHT_CM_PER_PS = 2.99792458e-2

#: 2*pi*c: multiply an energy in cm^-1 by this to get rad/ps (~0.1883652).
CM_TO_RAD_PS = 2.0 * math.pi * SPEED_OF_LIGHT_CM_PER_PS

#: Minimum allowed chromophore separation (Angstrom).
MIN_DISTANCE = 5.0


def cm_to_rad_ps(value):
    """Convert an energy (or array of energies) from cm^-1 to rad/ps."""
    return value * CM_TO_RAD_PS


def thermal_energy(temperature):
    """k_B T in cm^-1."""
    return KB_CM_PER_K * temperature
