"""Thermal Casimir-Polder potentials of molecules and atoms near plane metal surfaces."""

from cpk.errors import (
    ConfigError,
    ContractError,
    CPKError,
    MatsubaraConvergenceError,
    QuadratureError,
    SingularInputError,
)
from cpk.material import Drude, PerfectReflector
from cpk.numerics import Tolerances
from cpk.spectrum import Eigenstate, SpeciesState, ThermalEnsemble, Transition
from cpk.core import PotentialBreakdown, Scenario

__version__ = "0.1.0"

__all__ = [
    "CPKError",
    "ConfigError",
    "ContractError",
    "MatsubaraConvergenceError",
    "QuadratureError",
    "SingularInputError",
    "Drude",
    "PerfectReflector",
    "Tolerances",
    "Eigenstate",
    "SpeciesState",
    "ThermalEnsemble",
    "Transition",
    "PotentialBreakdown",
    "Scenario",
]
