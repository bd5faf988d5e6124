"""Acceptance criteria 1-14.

Each ``criterion_N`` returns ``(ok, detail)``; the pytest wrappers record the
outcome (printed as one PASS/FAIL line per criterion in the terminal summary)
and then assert it.  ``python tests/test_acceptance.py`` prints the same lines
without pytest.

Scenarios: the bundled LiH, OH, YbF and Rb species at z_A = 5 um have
z_A|w|/c = 0.046, 0.26, 1.59 and 40.2.  Tolerances are exactly the stated ones.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

from cpk.core import (
    Asymptote,
    Scenario,
    asymptote,
    casimir_energy_dilute,
    linear_regime_slope,
    u_nonresonant,
    u_nonresonant_closed,
    u_thermal_state,
    u_total_eigenstate,
)
from cpk.io import bundled_species
from cpk.material import GOLD, Drude, PerfectReflector
from cpk.numerics import coth_sum_identity, exp_weighted_sum_identity
from cpk.spectrum import ThermalEnsemble, characteristic_temperatures, photon_number
from cpk.units import thermal_frequency
from oracles import perfect_mirror_two_level

Z5 = 5e-6
PERFECT = PerfectReflector()
SPECIES = bundled_species()
GRID_Z = np.geomspace(0.1e-6, 50e-6, 5)
GRID_T = np.geomspace(1.0, 1000.0, 5)

RESULTS: dict = {}


def _scenario(name, T, z=Z5, surface=PERFECT, **kw):
    sp = SPECIES[name]
    if kw.get("thermal"):
        sp = sp.with_preparation(ThermalEnsemble())
    return Scenario(sp, surface, z, T)


def _rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------


def criterion_1():
    w = thermal_frequency(300.0)
    dev = _rel(w, 3.93e13)
    return dev < 5e-3, f"xi_1(300 K) = {w:.5e} rad/s, deviation {dev:.2e}"


def _coth_series(a, n_terms=10**6):
    # Sum_{j<=N} directly; the tail of a decreasing summand lies between the
    # integrals from N+1 and from N, both in closed form.
    j = np.arange(1, n_terms + 1, dtype=float)
    head = 0.5 / a**2 + math.fsum((1.0 / (a * a + j * j)).tolist())
    lo = math.atan(a / (n_terms + 1)) / a
    hi = math.atan(a / n_terms) / a
    return head + 0.5 * (lo + hi), 0.5 * (hi - lo)


def _exp_series(a):
    # Terms beyond N are bounded by the integral from N (summand decreasing there).
    n_terms = int(math.ceil(40.0 / a)) + 10
    j = np.arange(1, n_terms + 1, dtype=float)
    x = 2.0 * j * a
    head = 0.5 + math.fsum((np.exp(-x) * (1.0 + x + 0.5 * x * x)).tolist())
    y = 2.0 * n_terms * a
    bound = math.exp(-y) * (0.5 * y * y + 2.0 * y + 3.0) / (2.0 * a)
    return head, bound


def criterion_2():
    worst = 0.0
    for a in np.geomspace(1e-3, 1e3, 30):
        for closed, series in ((coth_sum_identity, _coth_series), (exp_weighted_sum_identity, _exp_series)):
            ref, cert = series(float(a))
            # the certified tail uncertainty counts against the agreement
            worst = max(worst, (abs(closed(float(a)) - ref) + cert) / abs(ref))
    return worst < 1e-8, f"max relative deviation (incl. tail bound) {worst:.2e} over 30 points x 2 identities"


def criterion_3():
    worst, where = 0.0, None
    for name in SPECIES:
        for z in GRID_Z:
            for T in GRID_T:
                s = _scenario(name, float(T), float(z))
                d = _rel(u_nonresonant(s), u_nonresonant_closed(s))
                if d > worst:
                    worst, where = d, (name, z, T)
    return worst < 1e-6, f"max deviation {worst:.2e} (at {where[0]}, z={where[1]:.2g} m, T={where[2]:.3g} K)"


def criterion_4():
    ref = u_total_eigenstate(_scenario("LiH", 1.0)).u_total
    temps = np.linspace(1.0, 300.0, 300)
    devs = [_rel(u_total_eigenstate(_scenario("LiH", float(T))).u_total, ref) for T in temps]
    i = int(np.argmax(devs))
    return devs[i] < 0.01, f"max |U(T)/U(1 K) - 1| = {devs[i]:.4f} at T = {temps[i]:.0f} K"


def _quad_precision_total(name, T, z):
    tr = SPECIES[name].transitions[0]
    return perfect_mirror_two_level(tr.omega_kn, tr.d2, z, T)


def criterion_5():
    bd = u_total_eigenstate(_scenario("LiH", 300.0), path="exact")
    _, _, ref = _quad_precision_total("LiH", 300.0, Z5)
    r_nr = abs(bd.u_nonresonant / bd.u_total)
    r_ev = abs(bd.u_evanescent / bd.u_total)
    dev = _rel(bd.u_total, ref)
    ok = r_nr > 10 and r_ev > 10 and dev < 1e-6
    return ok, f"|U_nr/U| = {r_nr:.1f}, |U_ev/U| = {r_ev:.1f}, deviation from 40-digit oracle {dev:.2e}"


def criterion_6():
    tw = characteristic_temperatures(SPECIES["LiH"].transitions[0].omega_kn, Z5).T_omega
    s = _scenario("LiH", 100.0 * tw)
    u = u_total_eigenstate(s).u_total
    dev = _rel(u, asymptote(s, Asymptote.EQ10))
    return dev < 5e-3, f"T = {100 * tw:.0f} K: |U/U_sat - 1| = {dev:.2e}"


def criterion_7():
    tr = SPECIES["Rb"].transitions[0]
    ct = characteristic_temperatures(tr.omega_kn, Z5)
    temps = np.linspace(3.0 * ct.T_z, ct.T_omega / 10.0, 25)
    u = np.array([u_total_eigenstate(_scenario("Rb", float(T))).u_total for T in temps])
    slope, icpt = np.polyfit(temps, u, 1)
    resid = u - (slope * temps + icpt)
    r2 = 1.0 - np.sum(resid**2) / np.sum((u - u.mean()) ** 2)
    ref = linear_regime_slope(_scenario("Rb", 300.0))
    dev = _rel(slope, ref)
    return r2 > 0.9999 and dev < 0.02, (
        f"T in [{temps[0]:.0f}, {temps[-1]:.0f}] K: R^2 = {r2:.7f}, slope deviation {dev:.2e}"
    )


def criterion_8():
    tr = SPECIES["Rb"].transitions[0]
    tz = characteristic_temperatures(tr.omega_kn, Z5).T_z
    s = _scenario("Rb", tz / 100.0)
    u = u_total_eigenstate(s).u_total
    dev = _rel(u, asymptote(s, Asymptote.EQ14))
    return dev < 0.01, f"T = {tz / 100:.2f} K: |U/U_CP - 1| = {dev:.2e}"


def criterion_9():
    u0 = u_total_eigenstate(_scenario("YbF", 0.0)).u_total
    u300 = u_total_eigenstate(_scenario("YbF", 300.0)).u_total
    growth = u300 / u0 - 1.0
    au = (u_total_eigenstate(_scenario("YbF", 300.0, surface=GOLD)).u_total
          / u_total_eigenstate(_scenario("YbF", 0.0, surface=GOLD)).u_total - 1.0)
    return 0.25 <= growth <= 0.40, f"perfect mirror growth {growth:+.3f} (gold Drude: {au:+.3f})"


def criterion_10():
    temps = np.linspace(10.0, 300.0, 30)
    u = [u_thermal_state(_scenario("LiH", float(T), thermal=True)) for T in temps]
    inv = max(_rel(x, u[0]) for x in u)
    ends = [_rel(u[i], asymptote(_scenario("LiH", float(temps[i]), thermal=True), Asymptote.EQ19))
            for i in (0, -1)]
    ok = inv < 0.01 and max(ends) < 0.01
    return ok, f"max |U(T)/U(10 K) - 1| = {inv:.4f}; vs ensemble limit: {ends[0]:.4f} (10 K), {ends[1]:.4f} (300 K)"


def criterion_11():
    sp = SPECIES["LiH"]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r1 = casimir_energy_dilute(sp, PERFECT, 1e-7, 300.0, 1e24)
        r2 = casimir_energy_dilute(sp, PERFECT, 1e-6, 300.0, 1e24)
    worst = max(r1.rel_diff, r2.rel_diff)
    scale = r1.numerical / r2.numerical
    dev = _rel(scale, 100.0)
    return worst < 1e-3 and dev < 5e-3, (
        f"numerical vs closed {worst:.2e}; E(0.1 um)/E(1 um) = {scale:.4f} (1/z^2 deviation {dev:.2e})"
    )


def criterion_12():
    worst = 0.0
    for w in np.geomspace(1e9, 1e17, 40):
        for T in np.geomspace(1e-2, 1e4, 25):
            n = photon_number(float(w), float(T))
            s = photon_number(-float(w), float(T)) + n + 1.0
            worst = max(worst, abs(s) / (np.finfo(float).eps * max(1.0, abs(n))))
    return worst <= 2.0, f"max |n(-w) + n(w) + 1| = {worst:.1f} ulp over 1000 points"


def criterion_13():
    drude = Drude(omega_p=1e20, gamma=GOLD.gamma)
    worst = {}
    for name in SPECIES:
        for z in GRID_Z:
            for T in GRID_T:
                p = u_total_eigenstate(_scenario(name, float(T), float(z)), path="exact")
                d = u_total_eigenstate(_scenario(name, float(T), float(z), surface=drude))
                for label, x, y in (("nr", d.u_nonresonant, p.u_nonresonant),
                                    ("ev", d.u_evanescent, p.u_evanescent),
                                    ("total", d.u_total, p.u_total)):
                    dev = 0.0 if x == y else _rel(x, y)
                    worst[name, label] = max(worst.get((name, label), 0.0), dev)
    top = max(worst.values())
    parts = "; ".join(f"{n} " + "/".join(f"{worst[n, c]:.1e}" for c in ("nr", "ev", "total")) for n in SPECIES)
    return top < 1e-4, f"max deviation {top:.2e}; nr/ev/total per species: {parts}"


def _fig3_csv(tmp: Path, threads: int) -> bytes:
    out = b""
    env = {**os.environ, "CPK_THREADS": str(threads)}
    for name in SPECIES:
        scen = tmp / f"{name}.yaml"
        scen.write_text(f"schema: 1\nspecies: {name}\nsurface: Au\nz_A: 5.0e-6\nT: 0\n")
        dest = tmp / f"{name}_{threads}.csv"
        subprocess.run(
            [sys.executable, "-m", "cpk.cli", "sweep", "--scenario", str(scen), "--axis", "temperature",
             "--min", "0", "--max", "300", "--points", "301", "--spacing", "linear",
             "--out", str(dest), "--format", "csv", "--asymptotes", "eq9,eq10,eq11,eq17",
             "--per-transition"],
            check=True, env=env,
        )
        out += dest.read_bytes()
    return out


def criterion_14(tmp: Path):
    one = _fig3_csv(tmp, 1)
    eight = _fig3_csv(tmp, 8)
    return one == eight, f"{len(one)} bytes of CSV, identical = {one == eight}"


# ---------------------------------------------------------------------------

TITLES = {
    1: "constant wiring",
    2: "sum identities",
    3: "closed-form equivalence",
    4: "temperature invariance (LiH-like)",
    5: "cancellation magnitude",
    6: "saturation",
    7: "atom linear regime",
    8: "retarded zero-T limit",
    9: "YbF-style crossover",
    10: "thermal ensemble",
    11: "Casimir energy",
    12: "photon-number identity",
    13: "Drude to perfect limit",
    14: "determinism",
}


def _check(n, *args):
    ok, detail = globals()[f"criterion_{n}"](*args)
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:2d} ({TITLES[n]}): {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.mark.parametrize("n", [n for n in TITLES if n != 14])
def test_criterion(n):
    _check(n)


def test_criterion_14(tmp_path):
    _check(14, tmp_path)


if __name__ == "__main__":
    import tempfile

    failed = 0
    for n in TITLES:
        try:
            if n == 14:
                with tempfile.TemporaryDirectory() as d:
                    _check(n, Path(d))
            else:
                _check(n)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
