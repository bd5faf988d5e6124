"""Surface response: permittivity and Fresnel reflection coefficients.

Everything here works on scalars or numpy arrays.  Real-frequency functions
take complex ``omega``; the ``*_imag`` variants take the real Matsubara
frequency ``xi`` (``omega = i xi``) and stay in real arithmetic, which is
where the nonresonant potential is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from cpk.errors import ContractError, SingularInputError
from cpk.units import C


@dataclass(frozen=True)
class PerfectReflector:
    """Ideal mirror: r_s = -1 and r_p = +1 at every frequency and angle."""

    name: str = "perfect"


@dataclass(frozen=True)
class Drude:
    """Dissipative metal, eps(w) = 1 - omega_p**2 / (w (w + i gamma))."""

    omega_p: float
    gamma: float = 0.0
    name: str = "drude"

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValueError(f"omega_p must be positive, got {self.omega_p!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")


SurfaceModel = Union[PerfectReflector, Drude]

# Literature Drude parameters for gold.  Not taken from any measurement done
# here; only the Drude path depends on them.
AU_OMEGA_P = 1.37e16  # rad/s
AU_GAMMA = 4.05e13  # rad/s
GOLD = Drude(omega_p=AU_OMEGA_P, gamma=AU_GAMMA, name="Au")


def permittivity(model: SurfaceModel, omega):
    """Relative permittivity at (complex) angular frequency ``omega``.

    Returns complex infinity for a perfect reflector.
    """
    omega = np.asarray(omega, dtype=complex)
    if isinstance(model, PerfectReflector):
        out = np.full(omega.shape, complex(np.inf, 0.0))
        return out[()] if out.ndim == 0 else out
    if np.any(omega == 0):
        raise SingularInputError("Drude permittivity has a pole at omega = 0")
    out = 1.0 - model.omega_p**2 / (omega * (omega + 1j * model.gamma))
    return out[()] if out.ndim == 0 else out


def permittivity_imag(model: Drude, xi):
    """eps(i xi) = 1 + omega_p**2 / (xi (xi + gamma)) for real ``xi > 0``."""
    if isinstance(model, PerfectReflector):
        raise ContractError("perfect reflector has no finite permittivity")
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise SingularInputError("eps(i xi) needs xi > 0; use the static limit for j = 0")
    out = 1.0 + model.omega_p**2 / (xi * (xi + model.gamma))
    return out[()] if out.ndim == 0 else out


def _branch(w):
    """Square root with Re >= 0 and, on the imaginary axis, Im >= 0."""
    root = np.sqrt(np.asarray(w, dtype=complex))
    flip = (root.real == 0) & (root.imag < 0)
    return np.where(flip, -root, root)


def b1(model: SurfaceModel, b, omega):
    """Normal wave-number inside the medium, sqrt(b^2 - (eps - 1) w^2 / c^2)."""
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ContractError("b must be non-negative")
    omega = np.asarray(omega, dtype=complex)
    if isinstance(model, PerfectReflector):
        raise ContractError("b1 is undefined for a perfect reflector")
    eps = permittivity(model, omega)
    out = _branch(b * b - (eps - 1.0) * omega * omega / C**2)
    return out[()] if out.ndim == 0 else out


def _with_eps_b1(eps, b, omega):
    return _branch(b * b - (eps - 1.0) * omega * omega / C**2)


def r_s(model: SurfaceModel, b, omega):
    b = np.asarray(b, dtype=float)
    if isinstance(model, PerfectReflector):
        out = np.broadcast_to(-1.0 + 0j, np.broadcast(b, np.asarray(omega)).shape).copy()
        return out[()] if out.ndim == 0 else out
    omega = np.asarray(omega, dtype=complex)
    bb1 = b1(model, b, omega)
    den = b + bb1
    if np.any(den == 0):
        raise SingularInputError("r_s denominator vanishes")
    out = (b - bb1) / den
    return out[()] if np.ndim(out) == 0 else out


def r_p(model: SurfaceModel, b, omega):
    b = np.asarray(b, dtype=float)
    if isinstance(model, PerfectReflector):
        out = np.broadcast_to(1.0 + 0j, np.broadcast(b, np.asarray(omega)).shape).copy()
        return out[()] if out.ndim == 0 else out
    omega = np.asarray(omega, dtype=complex)
    eps = permittivity(model, omega)
    bb1 = _with_eps_b1(eps, b, omega)
    den = eps * b + bb1
    if np.any(den == 0):
        raise SingularInputError("r_p denominator vanishes")
    out = (eps * b - bb1) / den
    return out[()] if np.ndim(out) == 0 else out


def reflection_imag(model: SurfaceModel, b, xi, eps=None):
    """(r_s, r_p) at imaginary frequency ``i xi``; real arrays.

    Numerators are rewritten so that nothing cancels when eps is close to 1
    or b is large compared with the skin wave-number:

        b - b1        = -(eps - 1) xi^2/c^2 / (b + b1)
        eps b - b1    = (eps - 1) [(eps + 1) b^2 - xi^2/c^2] / (eps b + b1)

    ``eps`` may be passed to override eps(i xi) (used for the static limit).
    """
    b = np.asarray(b, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if isinstance(model, PerfectReflector):
        shape = np.broadcast(b, xi).shape
        return np.full(shape, -1.0), np.full(shape, 1.0)
    if eps is None:
        eps = permittivity_imag(model, xi)
    em1 = eps - 1.0
    k2 = xi * xi / C**2
    bb1 = np.sqrt(b * b + em1 * k2)
    rs = -em1 * k2 / (b + bb1) ** 2
    rp = em1 * ((eps + 1.0) * b * b - k2) / (eps * b + bb1) ** 2
    return rs, rp
