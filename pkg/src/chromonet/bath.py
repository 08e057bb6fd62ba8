"""Drude-Lorentz phonon bath: spectral density, correlation function, mean phonon energy."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .units import CM_TO_RAD_PS, thermal_energy


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class BathSpec:
    """Identical independent bath on every site.

    ``lam`` is the reorganization energy and ``gamma`` the cutoff / phonon
    relaxation rate, both in cm^-1; ``temperature`` in K.
    """

    lam: float = 35.0
    gamma: float = 50.0
    temperature: float = 298.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("reorganization energy must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")

    @classmethod
    def from_dict(cls, data: dict) -> BathSpec:
        return cls(lam=float(data.get("lambda", cls.lam)),
                   gamma=float(data.get("gamma", cls.gamma)),
                   temperature=float(data.get("temperature", cls.temperature)))

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "gamma": self.gamma, "temperature": self.temperature}


def correlation_amplitude(b: BathSpec) -> complex:
    """High-temperature prefactor c = lam (2 k_B T - i gamma) in cm^-2; C(t) = c exp(-gamma |t|)."""
    return complex(2.0 * b.lam * thermal_energy(b.temperature), -b.lam * b.gamma)


def correlation_function(b: BathSpec, t):
    """C(t) in rad^2/ps^2 for t in ps."""
    c = correlation_amplitude(b) * CM_TO_RAD_PS**2
    return c * np.exp(-b.gamma * CM_TO_RAD_PS * np.abs(t))


def spectral_density(b: BathSpec, omega):
    """J(w) = (2/pi) lam gamma w / (w^2 + gamma^2), normalised so int_0^inf J/w dw = lam."""
    omega = np.asarray(omega, dtype=float)
    return (2.0 / math.pi) * b.lam * b.gamma * omega / (omega**2 + b.gamma**2)


def _bose(omega, beta):
    return 1.0 / np.expm1(beta * omega)


def mean_phonon_energy(b: BathSpec, rtol: float = 1e-10) -> float:
    """Bose-weighted mean phonon energy int J w n / int J n (cm^-1).

    Independent of ``lam``, so the integrands use the lam = 1 density.
    Integrated adaptively on [1e-6 gamma, W] with W doubled until the
    discarded tail is below 1e-6 of the total.
    """
    unit = BathSpec(1.0, b.gamma, b.temperature)
    beta = 1.0 / thermal_energy(b.temperature)

    def num(w):
        return spectral_density(unit, w) * w * _bose(w, beta)

    def den(w):
        return spectral_density(unit, w) * _bose(w, beta)

    lo = 1e-6 * b.gamma
    hi = max(b.gamma, thermal_energy(b.temperature)) * 40.0
    for _ in range(30):
        tail_n, _ = integrate.quad(num, hi, np.inf)
        tail_d, _ = integrate.quad(den, hi, np.inf)
        body_n, err_n = integrate.quad(num, lo, hi, epsabs=0.0, epsrel=rtol, limit=500)
        body_d, err_d = integrate.quad(den, lo, hi, epsabs=0.0, epsrel=rtol, limit=500)
        if tail_n < 1e-6 * body_n and tail_d < 1e-6 * body_d:
            break
        hi *= 2.0
    else:
        raise QuadratureError(f"tail did not fall below 1e-6 (upper limit {hi:g} cm^-1)")
    achieved = max(err_n / body_n, err_d / body_d)
    if achieved > 1e-6:
        warnings.warn(f"mean phonon energy quadrature reached only {achieved:.1e} relative accuracy",
                      RuntimeWarning, stacklevel=2)
    return body_n / body_d
