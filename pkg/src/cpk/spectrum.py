"""Species data, thermal occupation and the regime classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from cpk.errors import ContractError, SingularInputError
from cpk.units import C, HBAR, K_B


@dataclass(frozen=True)
class Transition:
    """One dipole transition seen from the prepared state n.

    ``omega_kn`` is (E_k - E_n)/hbar, negative for downward transitions;
    ``d2`` is |d_nk|^2 in C^2 m^2.
    """

    omega_kn: float
    d2: float

    def __post_init__(self):
        if self.omega_kn == 0 or not math.isfinite(self.omega_kn):
            raise ValueError("transition frequency must be finite and non-zero")
        if not self.d2 >= 0:
            raise ValueError("d2 must be non-negative")


@dataclass(frozen=True)
class Coupling:
    """Dipole coupling between two levels (indices into SpeciesState.levels)."""

    lower: int
    upper: int
    d2: float


@dataclass(frozen=True)
class Eigenstate:
    level: int = 0


@dataclass(frozen=True)
class ThermalEnsemble:
    pass


Preparation = Union[Eigenstate, ThermalEnsemble]


@dataclass(frozen=True)
class SpeciesState:
    name: str
    levels: tuple  # level energies in J
    couplings: tuple  # of Coupling
    preparation: Preparation = field(default_factory=Eigenstate)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(e) for e in self.levels))
        fixed = []
        for cp in self.couplings:
            i, k = cp.lower, cp.upper
            if not (0 <= i < len(self.levels) and 0 <= k < len(self.levels)):
                raise ValueError(f"coupling {i}->{k} refers to an unknown level")
            if self.levels[i] == self.levels[k]:
                raise ValueError(f"coupling {i}->{k} joins degenerate levels")
            if self.levels[i] > self.levels[k]:
                i, k = k, i
            fixed.append(Coupling(i, k, float(cp.d2)))
        object.__setattr__(self, "couplings", tuple(fixed))
        if isinstance(self.preparation, Eigenstate):
            if not 0 <= self.preparation.level < len(self.levels):
                raise ValueError("prepared level index out of range")

    @property
    def thermal(self) -> bool:
        return isinstance(self.preparation, ThermalEnsemble)

    def transitions_from(self, n: int) -> list:
        """Transitions of level ``n``, in coupling order."""
        out = []
        for cp in self.couplings:
            if n not in (cp.lower, cp.upper):
                continue
            k = cp.upper if n == cp.lower else cp.lower
            out.append(Transition((self.levels[k] - self.levels[n]) / HBAR, cp.d2))
        return out

    @property
    def transitions(self) -> list:
        """Transitions of the prepared eigenstate (all pairs for a thermal ensemble)."""
        if isinstance(self.preparation, Eigenstate):
            return self.transitions_from(self.preparation.level)
        return [
            Transition((self.levels[cp.upper] - self.levels[cp.lower]) / HBAR, cp.d2)
            for cp in self.couplings
        ]

    def with_preparation(self, preparation: Preparation) -> "SpeciesState":
        return SpeciesState(self.name, self.levels, self.couplings, preparation)


def two_level(name: str, omega: float, d2: float, preparation: Preparation | None = None) -> SpeciesState:
    """Ground level at E = 0, excited level at hbar*omega."""
    return SpeciesState(
        name=name,
        levels=(0.0, HBAR * omega),
        couplings=(Coupling(0, 1, d2),),
        preparation=preparation or Eigenstate(0),
    )


def photon_number(omega: float, T: float) -> float:
    """Thermal photon number, continued to negative frequencies.

    n(w) = 1/(exp(hbar w / k_B T) - 1) for w > 0 and n(w) = -[n(-w) + 1] for
    w < 0.  At T = 0 this is 0 (upward) or -1 (downward).
    """
    if omega == 0:
        raise SingularInputError("photon number diverges at omega = 0")
    if T < 0:
        raise ContractError("temperature must be >= 0")
    if T == 0:
        up = 0.0
    else:
        x = HBAR * abs(omega) / (K_B * T)
        up = math.exp(-x) if x > 700 else 1.0 / math.expm1(x)
    return up if omega > 0 else -(up + 1.0)


def boltzmann_weights(species: SpeciesState, T: float) -> list:
    if not T > 0:
        raise ContractError("Boltzmann weights need T > 0; prepare an eigenstate for T = 0")
    e = np.asarray(species.levels)
    w = np.exp(-(e - e.min()) / (K_B * T))
    z = math.fsum(w.tolist())
    return [float(x) / z for x in w]


@dataclass(frozen=True)
class CharacteristicTemperatures:
    T_omega: float
    T_z: float


def characteristic_temperatures(omega: float, z_A: float) -> CharacteristicTemperatures:
    """Spectroscopic (hbar|w|/k_B) and geometric (hbar c/(z k_B)) temperatures."""
    if omega == 0:
        raise SingularInputError("omega must be non-zero")
    if not z_A > 0:
        raise ContractError("z_A must be positive")
    return CharacteristicTemperatures(HBAR * abs(omega) / K_B, HBAR * C / (z_A * K_B))


MOLECULE = "temperature-invariant (molecule)"
GEOMETRIC = "geometric low-temperature"
LINEAR = "linear regime"
SATURATED = "saturated"
CROSSOVER = "crossover"

REGIME_FACTOR = 10.0


def dominant_transition(transitions: Sequence[Transition]) -> Transition:
    # largest |d|^2, ties broken by the lowest frequency
    return min(transitions, key=lambda t: (-t.d2, abs(t.omega_kn)))


def regime_label(ratio_z_omega: float, T_over_Tz: float, T_over_Tomega: float) -> str:
    """Regime from dimensionless ratios only.

    ``a << b`` is read as ``a < b/10``.  The geometric side is judged by the
    first Matsubara frequency against c/z (i.e. 2 pi T/T_z < 1), because
    that is where the exponential cut-off of the Matsubara sum sets in.
    """
    f = REGIME_FACTOR
    if ratio_z_omega < 1 / f:
        return MOLECULE
    if T_over_Tomega > f:
        return SATURATED
    if T_over_Tomega < 1 / f:
        return GEOMETRIC if 2 * math.pi * T_over_Tz < 1 else LINEAR
    return CROSSOVER


def classify_regime(species: SpeciesState, z_A: float, T: float) -> str:
    tr = dominant_transition(species.transitions)
    temps = characteristic_temperatures(tr.omega_kn, z_A)
    return regime_label(z_A * abs(tr.omega_kn) / C, T / temps.T_z, T / temps.T_omega)
