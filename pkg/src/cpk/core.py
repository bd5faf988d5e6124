"""Casimir-Polder potential engine.

The primitive is the potential generated by a single transition.  Totals are
sums over transitions, so that the thermal-state formula and the per-pair
diagnostics work from the same pieces.

Two independent routes exist for the perfect reflector:

* the *exact* route integrates the reflection-coefficient integrand over the
  in-plane wave number numerically for every Matsubara frequency, and works
  for any surface model;
* the *closed* route uses the analytic b-integral that a frequency
  independent mirror allows.

Closed-form asymptotes live in :func:`asymptote` and are never used inside
either route.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from cpk.errors import ContractError, SingularInputError, CPKError, MatsubaraConvergenceError, QuadratureError
from cpk.material import Drude, PerfectReflector, SurfaceModel, r_p, r_s, reflection_imag
from cpk.numerics import (
    DEFAULT_TOLERANCES,
    Tolerances,
    compensated_sum,
    integrate_decaying,
    integrate_interval,
    sum_matsubara,
)
from cpk.spectrum import (
    Eigenstate,
    SpeciesState,
    ThermalEnsemble,
    Transition,
    boltzmann_weights,
    classify_regime,
    photon_number,
)
from cpk.units import C, EPS0, HBAR, K_B, MU0

# j = 0 of a Drude metal: r_p(i 0+) is taken at xi = STATIC_XI_FRACTION * xi_1
# and cross-checked at a tenth of that.
STATIC_XI_FRACTION = 1e-6


class StaticLimitWarning(UserWarning):
    pass


class MoleculeRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Scenario:
    species: SpeciesState
    surface: SurfaceModel
    z_A: float
    T: float
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if not self.z_A > 0:
            raise ContractError(f"z_A must be positive, got {self.z_A!r}")
        if not self.T >= 0:
            raise ContractError(f"T must be >= 0, got {self.T!r}")

    def replace(self, **changes) -> "Scenario":
        fields = dict(species=self.species, surface=self.surface, z_A=self.z_A,
                      T=self.T, tolerances=self.tolerances)
        fields.update(changes)
        return Scenario(**fields)


@dataclass(frozen=True)
class TransitionComponents:
    transition: Transition
    u_nr: float
    u_ev: float


@dataclass(frozen=True)
class PotentialBreakdown:
    u_nonresonant: float
    u_evanescent: float
    u_total: float
    per_transition: tuple
    regime: str
    far_field_warning: bool
    path: str = "closed"


def _attach(exc: CPKError, tr: Transition, where: str) -> CPKError:
    msg = f"{exc} [transition omega_kn={tr.omega_kn:.6g} rad/s, {where}]"
    if isinstance(exc, QuadratureError):
        return QuadratureError(msg, value=exc.value, error=exc.error)
    if isinstance(exc, MatsubaraConvergenceError):
        return MatsubaraConvergenceError(msg, exc.partial_sum, exc.last_term, exc.n_terms)
    return type(exc)(msg)


def _matsubara_xi(T: float) -> float:
    return 2.0 * math.pi * K_B * T / HBAR


# ---------------------------------------------------------------------------
# nonresonant part


def _bracket_imag(surface, b, xi, z, eps=None):
    """exp(-2bz) {2 b^2 c^2 r_p - xi^2 (r_s + r_p)} at frequency i xi."""
    rs, rp = reflection_imag(surface, b, xi, eps=eps)
    return np.exp(-2.0 * b * z) * (2.0 * b * b * C * C * rp - xi * xi * (rs + rp))


def _static_integral(surface, z, xi_reg, tol):
    """b-integral of the j = 0 bracket (xi -> 0+, only 2 b^2 c^2 r_p survives)."""

    def f(b):
        _, rp = reflection_imag(surface, b, xi_reg)
        return np.exp(-2.0 * b * z) * 2.0 * b * b * C * C * rp

    value, _ = integrate_decaying(f, 0.0, 1.0 / (2.0 * z), tol)
    return value


def _nr_exact_one(tr: Transition, surface, z: float, T: float, tol: Tolerances) -> float:
    w = tr.omega_kn
    if T == 0:
        return _nr_exact_zero_T(tr, surface, z, tol)
    xi1 = _matsubara_xi(T)
    pref = -MU0 * K_B * T / (6.0 * math.pi * HBAR) * tr.d2
    scale = 1.0 / (2.0 * z)

    if isinstance(surface, PerfectReflector):
        static = C * C / (2.0 * z**3)
    else:
        try:
            static = _static_integral(surface, z, STATIC_XI_FRACTION * xi1, tol)
            check = _static_integral(surface, z, 0.1 * STATIC_XI_FRACTION * xi1, tol)
        except QuadratureError as exc:
            raise _attach(exc, tr, "static j=0 b-integral") from exc
        if abs(check - static) > 10 * tol.rel_tol * abs(static):
            warnings.warn(
                f"j=0 static limit not stable: {static:.10g} vs {check:.10g}",
                StaticLimitWarning,
                stacklevel=3,
            )

    def terms(js):
        js = np.asarray(js)
        xi = js * xi1
        weight = pref * w / (w * w + xi * xi)
        out = np.empty(js.size)
        head = js == 0
        out[head] = weight[head] * static
        rest = ~head
        if rest.any():
            xr = xi[rest]
            wr = weight[rest]

            def f(b):
                return wr[:, None] * _bracket_imag(surface, b, xr[:, None], z)

            try:
                vals, _ = integrate_decaying(f, xr / C, scale, tol)
            except QuadratureError as exc:
                raise _attach(exc, tr, f"j in [{js[rest][0]}, {js[rest][-1]}]") from exc
            out[rest] = vals
        return out

    try:
        return sum_matsubara(terms, tol, vectorized=True, accelerate=False)
    except MatsubaraConvergenceError as exc:
        raise _attach(exc, tr, "Matsubara sum") from exc


def _nr_exact_zero_T(tr, surface, z, tol):
    # k_B T sum'_j -> (hbar / 2 pi) * integral over xi
    w = tr.omega_kn
    pref = -MU0 / (12.0 * math.pi**2) * tr.d2
    scale = 1.0 / (2.0 * z)

    def outer(xi):
        xi = np.asarray(xi, dtype=float)

        def f(b):
            return _bracket_imag(surface, b, xi[:, None], z)

        inner, _ = integrate_decaying(f, xi / C, scale, tol)
        return pref * w / (w * w + xi * xi) * inner

    try:
        value, _ = integrate_decaying(outer, 0.0, min(abs(w), C / (2.0 * z)), tol)
    except QuadratureError as exc:
        raise _attach(exc, tr, "T=0 frequency integral") from exc
    return value


def _nr_closed_one(tr: Transition, z: float, T: float, tol: Tolerances) -> float:
    w = tr.omega_kn
    if T == 0:
        pref = -tr.d2 / (24.0 * math.pi**2 * EPS0 * z**3)

        def f(xi):
            a = z * xi / C
            return pref * w / (w * w + xi * xi) * np.exp(-2 * a) * (1 + 2 * a + 2 * a * a)

        value, _ = integrate_decaying(f, 0.0, min(abs(w), C / (2.0 * z)), tol)
        return value

    xi1 = _matsubara_xi(T)
    a1 = z * xi1 / C
    pref = -K_B * T / (12.0 * math.pi * EPS0 * HBAR * z**3) * tr.d2

    def terms(js):
        js = np.asarray(js, dtype=float)
        x = js * a1
        return pref * w / (w * w + (js * xi1) ** 2) * np.exp(-2 * x) * (1 + 2 * x + 2 * x * x)

    try:
        return sum_matsubara(terms, tol, vectorized=True, accelerate=False)
    except MatsubaraConvergenceError as exc:
        raise _attach(exc, tr, "Matsubara sum") from exc


# ---------------------------------------------------------------------------
# evanescent part


def _ev_exact_one(tr: Transition, surface, z: float, T: float, tol: Tolerances) -> float:
    n = photon_number(tr.omega_kn, T)
    if n == 0.0:
        return 0.0
    w = tr.omega_kn
    if isinstance(surface, Drude) and surface.gamma == 0 and surface.omega_p**2 > 2 * w * w:
        # eps(w) < -1 and real: r_p has a surface-plasmon pole on the real b axis
        raise SingularInputError(
            f"lossless Drude surface has a surface-plasmon pole at omega={w:.4g} rad/s; "
            "give the metal a non-zero gamma"
        )
    pref = MU0 / (12.0 * math.pi) * n * tr.d2

    def f(b):
        rs = r_s(surface, b, w)
        rp = r_p(surface, b, w)
        return pref * np.exp(-2.0 * b * z) * (
            2.0 * b * b * C * C * rp.real + w * w * (rs.real + rp.real)
        )

    try:
        value, _ = integrate_decaying(f, 0.0, 1.0 / (2.0 * z), tol)
    except QuadratureError as exc:
        raise _attach(exc, tr, "evanescent b-integral") from exc
    return value


def _ev_closed_one(tr: Transition, z: float, T: float) -> float:
    return photon_number(tr.omega_kn, T) * tr.d2 / (24.0 * math.pi * EPS0 * z**3)


# ---------------------------------------------------------------------------
# public per-scenario operations


def _require_perfect(scenario: Scenario, what: str):
    if not isinstance(scenario.surface, PerfectReflector):
        raise ContractError(f"{what} is only defined for a perfect reflector")


def nonresonant_components(scenario: Scenario) -> list:
    s = scenario
    return [_nr_exact_one(tr, s.surface, s.z_A, s.T, s.tolerances) for tr in s.species.transitions]


def u_nonresonant(scenario: Scenario) -> float:
    """Nonresonant potential by numerical b-integration and Matsubara summation."""
    return compensated_sum(nonresonant_components(scenario))


def u_nonresonant_closed(scenario: Scenario) -> float:
    """Nonresonant potential of a perfect reflector from the analytic b-integral."""
    _require_perfect(scenario, "u_nonresonant_closed")
    s = scenario
    return compensated_sum(
        [_nr_closed_one(tr, s.z_A, s.T, s.tolerances) for tr in s.species.transitions]
    )


def u_evanescent(scenario: Scenario) -> float:
    s = scenario
    return compensated_sum(
        [_ev_exact_one(tr, s.surface, s.z_A, s.T, s.tolerances) for tr in s.species.transitions]
    )


def u_evanescent_closed(scenario: Scenario) -> float:
    _require_perfect(scenario, "u_evanescent_closed")
    s = scenario
    return compensated_sum([_ev_closed_one(tr, s.z_A, s.T) for tr in s.species.transitions])


def u_total_eigenstate(scenario: Scenario, path: str = "auto") -> PotentialBreakdown:
    """Nonresonant + evanescent potential of an energy eigenstate.

    The propagating resonant part is not modelled; ``far_field_warning`` is
    raised whenever some transition has z|w|/c > 1, where it stops being
    negligible.  ``path`` is ``"auto"`` (closed forms for a perfect
    reflector, numerical otherwise), ``"exact"`` or ``"closed"``.
    """
    s = scenario
    if not isinstance(s.species.preparation, Eigenstate):
        raise ContractError("u_total_eigenstate needs an Eigenstate preparation")
    if path == "auto":
        path = "closed" if isinstance(s.surface, PerfectReflector) else "exact"
    if path == "closed":
        _require_perfect(s, "closed path")
    elif path != "exact":
        raise ValueError(f"unknown path {path!r}")

    parts = []
    for tr in s.species.transitions:
        if path == "closed":
            nr = _nr_closed_one(tr, s.z_A, s.T, s.tolerances)
            ev = _ev_closed_one(tr, s.z_A, s.T)
        else:
            nr = _nr_exact_one(tr, s.surface, s.z_A, s.T, s.tolerances)
            ev = _ev_exact_one(tr, s.surface, s.z_A, s.T, s.tolerances)
        parts.append(TransitionComponents(tr, nr, ev))
    u_nr = compensated_sum([p.u_nr for p in parts])
    u_ev = compensated_sum([p.u_ev for p in parts])
    return PotentialBreakdown(
        u_nonresonant=u_nr,
        u_evanescent=u_ev,
        u_total=u_nr + u_ev,
        per_transition=tuple(parts),
        regime=classify_regime(s.species, s.z_A, s.T),
        far_field_warning=far_field(s),
        path=path,
    )


def far_field(scenario: Scenario) -> bool:
    return any(scenario.z_A * abs(t.omega_kn) / C > 1 for t in scenario.species.transitions)


# ---------------------------------------------------------------------------
# thermal ensemble


def _weights(species: SpeciesState, T: float) -> list:
    if T > 0:
        return boltzmann_weights(species, T)
    e = list(species.levels)
    ground = e.index(min(e))
    return [1.0 if i == ground else 0.0 for i in range(len(e))]


def pair_nonresonant(scenario: Scenario, lower: int, upper: int, d2: float) -> float:
    """U^nr_{nk}: nonresonant potential of level ``lower`` due to its partner ``upper``.

    Swapping the two levels flips the sign of the transition frequency and
    therefore of the result (U_kn = -U_nk).
    """
    s = scenario
    e = s.species.levels
    tr = Transition((e[upper] - e[lower]) / HBAR, d2)
    if isinstance(s.surface, PerfectReflector):
        return _nr_closed_one(tr, s.z_A, s.T, s.tolerances)
    return _nr_exact_one(tr, s.surface, s.z_A, s.T, s.tolerances)


def u_thermal_state(scenario: Scenario) -> float:
    """Potential of a species in thermal equilibrium with the field.

    Resonant parts cancel pairwise; each transition contributes
    ``(p_n + p_k) tanh(hbar w_kn / 2 k_B T) U^nr_nk``.
    """
    s = scenario
    if not s.T > 0:
        raise ContractError("thermal state needs T > 0")
    p = boltzmann_weights(s.species, s.T)
    out = []
    for cp in s.species.couplings:
        w = (s.species.levels[cp.upper] - s.species.levels[cp.lower]) / HBAR
        u_nk = pair_nonresonant(s, cp.lower, cp.upper, cp.d2)
        out.append((p[cp.lower] + p[cp.upper]) * math.tanh(HBAR * w / (2 * K_B * s.T)) * u_nk)
    return compensated_sum(out)


# ---------------------------------------------------------------------------
# closed-form asymptotes (perfect reflector)


class Asymptote(str, Enum):
    EQ9 = "eq9"  # nonresonant, T << T_z, z|w|/c << 1
    EQ10 = "eq10"  # total, molecule, temperature independent
    EQ11 = "eq11"  # nonresonant, T >> T_w (j = 0 term)
    EQ12 = "eq12"  # evanescent, T >> T_w
    EQ14 = "eq14"  # nonresonant, retarded, T << T_z
    EQ15 = "eq15"  # evanescent, T << T_w
    EQ16 = "eq16"  # total, retarded, T << T_z
    EQ17 = "eq17"  # total, T_z << T << T_w (linear in T)
    EQ19 = "eq19"  # thermal ensemble, molecule

    @property
    def component(self) -> str:
        return {
            "eq9": "nr", "eq11": "nr", "eq14": "nr",
            "eq12": "ev", "eq15": "ev",
        }.get(self.value, "total")


def _theta(x: float) -> float:
    return 1.0 if x > 0 else (0.0 if x < 0 else 0.5)


def asymptote(scenario: Scenario, which) -> float:
    """Evaluate one closed-form limit; the caller chooses which one applies."""
    try:
        which = Asymptote(which)
    except ValueError:
        raise ValueError(f"unknown asymptote {which!r}") from None
    s = scenario
    z, T = s.z_A, s.T
    k = 1.0 / (24.0 * math.pi * EPS0 * z**3)
    if which is Asymptote.EQ19:
        p = _weights(s.species, T)
        return -0.5 * k * math.fsum(
            (p[cp.lower] + p[cp.upper]) * cp.d2 for cp in s.species.couplings
        )
    trs = s.species.transitions
    if which is Asymptote.EQ9:
        return -k * math.fsum((photon_number(t.omega_kn, T) + 0.5) * t.d2 for t in trs)
    if which is Asymptote.EQ10:
        return -0.5 * k * math.fsum(t.d2 for t in trs)
    if which is Asymptote.EQ11:
        return -k * math.fsum(K_B * T / (HBAR * t.omega_kn) * t.d2 for t in trs)
    if which is Asymptote.EQ12:
        return k * math.fsum((K_B * T / (HBAR * t.omega_kn) - 0.5) * t.d2 for t in trs)
    if which is Asymptote.EQ14:
        return -C / (16.0 * math.pi**2 * EPS0 * z**4) * math.fsum(t.d2 / t.omega_kn for t in trs)
    if which is Asymptote.EQ15:
        return -k * math.fsum(_theta(-t.omega_kn) * t.d2 for t in trs)
    if which is Asymptote.EQ16:
        # retarded term carries 3c/(2 pi z w) so that eq16 = eq14 + eq15
        return -k * math.fsum(
            (3.0 * C / (2.0 * math.pi * z * t.omega_kn) + _theta(-t.omega_kn)) * t.d2 for t in trs
        )
    if which is Asymptote.EQ17:
        return -k * math.fsum(
            (K_B * T / (HBAR * t.omega_kn) + _theta(-t.omega_kn)) * t.d2 for t in trs
        )
    raise ValueError(f"unknown asymptote {which!r}")  # pragma: no cover


def linear_regime_slope(scenario: Scenario) -> float:
    """dU/dT in the linear regime."""
    k = 1.0 / (24.0 * math.pi * EPS0 * scenario.z_A**3)
    return -k * K_B / HBAR * math.fsum(t.d2 / t.omega_kn for t in scenario.species.transitions)


# ---------------------------------------------------------------------------
# dilute-dielectric Casimir energy


@dataclass(frozen=True)
class CasimirResult:
    closed: float
    numerical: float
    z_cut: float
    molecule_regime: bool

    @property
    def rel_diff(self) -> float:
        return abs(self.numerical - self.closed) / abs(self.closed)


def casimir_energy_closed(species: SpeciesState, z: float, T: float, eta: float) -> float:
    """-eta/(96 pi eps0 z^2) sum_{n<k} p_nk |d_nk|^2 (J/m^2).

    Negative: it is the integral of an attractive potential.
    """
    if not eta > 0:
        raise ContractError("eta must be positive")
    if not z > 0:
        raise ContractError("z must be positive")
    p = _weights(species, T)
    s = math.fsum((p[cp.lower] + p[cp.upper]) * cp.d2 for cp in species.couplings)
    return -eta * s / (96.0 * math.pi * EPS0 * z**2)


def casimir_energy_numerical(
    species: SpeciesState,
    surface: SurfaceModel,
    z: float,
    T: float,
    eta: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
    *,
    cut_factor: float = 10.0,
    tail_check: float = 1e-3,
) -> tuple:
    """eta * integral_z^inf U(z_A) dz_A with the thermal-state potential.

    ``[z, z_cut]`` is integrated in ``ln z_A``; beyond ``z_cut`` the potential
    is taken as C/z_A^3 with C = U(z_cut) z_cut^3, which is accepted once
    U(2 z_cut) (2 z_cut)^3 agrees with it to ``tail_check``.

    Returns (energy, z_cut, molecule_regime_ok).
    """
    if not eta > 0:
        raise ContractError("eta must be positive")
    thermal = species.with_preparation(ThermalEnsemble())
    base = Scenario(thermal, surface, z, T, tol)

    def pot(zz):
        return u_thermal_state(base.replace(z_A=float(zz)))

    z_cut = cut_factor * z
    for _ in range(8):
        c0 = pot(z_cut) * z_cut**3
        c1 = pot(2 * z_cut) * (2 * z_cut) ** 3
        if abs(c1 - c0) <= tail_check * abs(c0):
            break
        z_cut *= 4
    else:
        warnings.warn("algebraic tail of the Casimir integrand could not be certified",
                      MoleculeRegimeWarning, stacklevel=2)

    w_max = max(abs(t.omega_kn) for t in thermal.transitions)
    molecule_ok = z_cut * w_max / C < 0.1
    if not molecule_ok:
        warnings.warn(
            f"molecule regime violated: z|w|/c = {z_cut * w_max / C:.3g} at z_A = {z_cut:.3g} m",
            MoleculeRegimeWarning,
            stacklevel=2,
        )

    def f(s):
        zz = z * np.exp(s)
        return np.array([pot(v) for v in zz]) * zz

    inner_tol = Tolerances(rel_tol=max(tol.rel_tol * 100, 1e-7), abs_floor=0.0,
                           max_matsubara_terms=tol.max_matsubara_terms,
                           max_quad_depth=tol.max_quad_depth)
    body, _ = integrate_interval(f, 0.0, math.log(z_cut / z), inner_tol)
    tail = c0 / (2.0 * z_cut**2)
    return eta * (body + tail), z_cut, molecule_ok


def casimir_energy_dilute(species, surface, z, T, eta, tol: Tolerances = DEFAULT_TOLERANCES) -> CasimirResult:
    closed = casimir_energy_closed(species, z, T, eta)
    numerical, z_cut, ok = casimir_energy_numerical(species, surface, z, T, eta, tol)
    return CasimirResult(closed=closed, numerical=numerical, z_cut=z_cut, molecule_regime=ok)
