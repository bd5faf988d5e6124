"""Physical constants (CODATA 2018, SI) and the few unit conversions the CLI needs."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34  # J s
    k_B: float = 1.380649e-23  # J/K
    c: float = 299792458.0  # m/s
    mu0: float = 1.25663706212e-6  # H/m
    eps0: float = 1.0 / (1.25663706212e-6 * 299792458.0**2)  # F/m, tied to mu0 and c
    debye: float = 3.33564e-30  # C m

    def __post_init__(self):
        for name in ("hbar", "k_B", "c", "mu0", "eps0", "debye"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")


CONST = PhysicalConstants()

HBAR = CONST.hbar
K_B = CONST.k_B
C = CONST.c
MU0 = CONST.mu0
EPS0 = CONST.eps0
DEBYE = CONST.debye


def thermal_frequency(T: float) -> float:
    """Return k_B T / hbar in rad/s."""
    if T < 0 or math.isnan(T):
        raise ValueError(f"temperature must be >= 0 K, got {T!r}")
    return K_B * T / HBAR


def debye2_to_si(d2_debye2: float) -> float:
    """Squared dipole moment D^2 -> C^2 m^2."""
    return d2_debye2 * DEBYE * DEBYE


def si_to_debye2(d2: float) -> float:
    return d2 / (DEBYE * DEBYE)
