"""Temperature/distance sweeps and asymptote comparison reports.

CSV layout of a sweep (header row always present, columns in this order):

    T_K | z_A_m                      axis value
    U_nr_J, U_ev_J, U_total_J        default path for the surface model
    U_nr_exact_J, ...                if "exact" requested
    U_nr_closed_J, ...               if "closed" requested (perfect reflector)
    eq9_J, eq10_J, ...               requested asymptotes, in the order given
    U_nr_t0_J, U_ev_t0_J, ...        per transition of the prepared state
    regime, far_field_warning, error

Floats are written with 17 significant digits, so they read back exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from cpk.core import (
    Asymptote,
    Scenario,
    asymptote,
    far_field,
    u_thermal_state,
    u_total_eigenstate,
)
from cpk.errors import ConfigError, CPKError
from cpk.material import PerfectReflector
from cpk.spectrum import (
    Eigenstate,
    characteristic_temperatures,
    classify_regime,
    dominant_transition,
)
from cpk.units import C

AXES = {"temperature": "T_K", "distance": "z_A_m"}
OUTPUTS = {"exact", "closed", "asymptotes", "per_transition", "regime"}


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    min: float
    max: float
    points: int
    spacing: str = "linear"
    outputs: frozenset = frozenset({"regime"})
    asymptotes: tuple = ()

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {sorted(AXES)}, got {self.axis!r}")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.points < 2:
            raise ConfigError("points must be >= 2")
        if not self.min < self.max:
            raise ConfigError("need min < max")
        if self.spacing == "log" and not self.min > 0:
            raise ConfigError("log spacing needs min > 0")
        if self.axis == "distance" and not self.min > 0:
            raise ConfigError("distance axis needs min > 0")
        if self.axis == "temperature" and self.min < 0:
            raise ConfigError("temperature axis needs min >= 0")
        unknown = set(self.outputs) - OUTPUTS
        if unknown:
            raise ConfigError(f"unknown outputs {sorted(unknown)}")
        for a in self.asymptotes:
            try:
                Asymptote(a)
            except ValueError:
                raise ConfigError(f"unknown asymptote {a!r}") from None

    def grid(self) -> list:
        if self.spacing == "log":
            g = np.geomspace(self.min, self.max, self.points)
        else:
            g = np.linspace(self.min, self.max, self.points)
        return [float(x) for x in g]


@dataclass
class SweepTable:
    columns: list
    rows: list = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(1 for r in self.rows if r[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        recs = [dict(zip(self.columns, [_json_value(v) for v in r])) for r in self.rows]
        return json.dumps({"columns": self.columns, "rows": recs}, indent=1) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def columns_for(template: Scenario, spec: SweepSpec) -> list:
    cols = [AXES[spec.axis], "U_nr_J", "U_ev_J", "U_total_J"]
    for path in ("exact", "closed"):
        if path in spec.outputs:
            cols += [f"U_nr_{path}_J", f"U_ev_{path}_J", f"U_total_{path}_J"]
    if "asymptotes" in spec.outputs or spec.asymptotes:
        cols += [f"{a}_J" for a in spec.asymptotes]
    if "per_transition" in spec.outputs:
        for i in range(len(template.species.transitions)):
            cols += [f"U_nr_t{i}_J", f"U_ev_t{i}_J"]
    cols += ["regime", "far_field_warning", "error"]
    return cols


def _components(s: Scenario, path: str):
    """(U_nr, U_ev, U_total, per-transition list) for either preparation."""
    if isinstance(s.species.preparation, Eigenstate):
        bd = u_total_eigenstate(s, path=path)
        per = [(p.u_nr, p.u_ev) for p in bd.per_transition]
        return bd.u_nonresonant, bd.u_evanescent, bd.u_total, per
    if s.T == 0:
        # the thermal ensemble freezes into the ground state
        ground = s.replace(species=s.species.with_preparation(Eigenstate(_ground(s))))
        return _components(ground, path)
    u = u_thermal_state(s)
    return u, 0.0, u, [(math.nan, math.nan)] * len(s.species.transitions)


def _ground(s: Scenario) -> int:
    e = list(s.species.levels)
    return e.index(min(e))


def evaluate_point(args) -> list:
    """One sweep row; module level so that worker processes can pickle it."""
    template, spec, value, ncols = args
    s = template.replace(T=value) if spec.axis == "temperature" else template.replace(z_A=value)
    n_tr = len(template.species.transitions)
    row = [value]
    try:
        u_nr, u_ev, u_tot, per = _components(s, "auto")
        row += [u_nr, u_ev, u_tot]
        for path in ("exact", "closed"):
            if path in spec.outputs:
                a, b, c, _ = _components(s, path)
                row += [a, b, c]
        if "asymptotes" in spec.outputs or spec.asymptotes:
            row += [asymptote(s, a) for a in spec.asymptotes]
        if "per_transition" in spec.outputs:
            for i in range(n_tr):
                row += list(per[i])
        row += [classify_regime(s.species, s.z_A, s.T), far_field(s), ""]
    except (CPKError, ValueError) as exc:
        row = [value] + [math.nan] * (ncols - 4) + ["", False, f"{type(exc).__name__}: {exc}"]
    return row


def thread_count(workers=None) -> int:
    if workers is None:
        raw = os.environ.get("CPK_THREADS", "0")
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigError(f"CPK_THREADS must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ConfigError("thread count must be >= 0")
    return workers or (os.cpu_count() or 1)


def run_sweep(template: Scenario, spec: SweepSpec, workers=None) -> SweepTable:
    """Evaluate the template on every grid point; rows come back in axis order."""
    cols = columns_for(template, spec)
    jobs = [(template, spec, v, len(cols)) for v in spec.grid()]
    n = min(thread_count(workers), len(jobs))
    if n <= 1:
        rows = [evaluate_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(evaluate_point, jobs, chunksize=max(1, len(jobs) // (4 * n))))
    return SweepTable(cols, rows)


# ---------------------------------------------------------------------------
# asymptote comparison


def _in_regime(which: Asymptote, beta: float, T: float, T_z: float, T_w: float) -> bool:
    """Declared validity window of each closed form, with a << b read as a < b/10."""
    f = 10.0
    molecule = beta < 1 / f
    retarded = beta > f
    hot = T > f * T_w
    return {
        Asymptote.EQ9: molecule and T < T_z / f,
        Asymptote.EQ10: molecule or hot,
        Asymptote.EQ11: T > f * min(T_w, T_z),
        Asymptote.EQ12: hot,
        Asymptote.EQ14: retarded and T < T_z / f,
        Asymptote.EQ15: T < T_w / f,
        Asymptote.EQ16: retarded and T < T_z / f,
        Asymptote.EQ17: f * T_z < T < T_w / f,
        Asymptote.EQ19: molecule,
    }[which]


TOTAL_FORMS = (Asymptote.EQ10, Asymptote.EQ16, Asymptote.EQ17)


def compare_asymptotics(scenario: Scenario, temperatures, tolerance: float = 0.01) -> dict:
    """Exact potential against every closed form on a temperature grid.

    Each asymptote is compared with the component it describes (nonresonant,
    evanescent or total).  The deviation is normalized by the larger of that
    component and the total potential, so a component whose limit is exactly
    zero is judged by its weight in the total.  Deviations beyond
    ``tolerance`` inside the formula's validity window are flagged.
    """
    s0 = scenario
    thermal = not isinstance(s0.species.preparation, Eigenstate)
    forms = [Asymptote.EQ19] if thermal else [a for a in Asymptote if a is not Asymptote.EQ19]
    tr = dominant_transition(s0.species.transitions)
    beta = s0.z_A * abs(tr.omega_kn) / C
    temps = characteristic_temperatures(tr.omega_kn, s0.z_A)

    rows = []
    summary = {a.value: {"max_rel_dev_in_regime": None, "points_in_regime": 0, "flagged": 0}
               for a in forms}
    for T in temperatures:
        T = float(T)
        s = s0.replace(T=T)
        entry = {"T_K": T}
        try:
            u_nr, u_ev, u_tot, _ = _components(s, "auto")
        except CPKError as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(entry)
            continue
        label = classify_regime(s.species, s.z_A, T)
        entry.update({"U_nr_J": u_nr, "U_ev_J": u_ev, "U_total_J": u_tot, "regime": label})
        exact = {"nr": u_nr, "ev": u_ev, "total": u_tot}
        asy = {}
        for a in forms:
            val = asymptote(s, a)
            ref = exact["total" if thermal else a.component]
            scale = max(abs(ref), abs(u_tot))
            dev = abs(val - ref) / scale if scale > 0 else (0.0 if val == 0 else math.inf)
            inside = _in_regime(a, beta, T, temps.T_z, temps.T_omega)
            flagged = inside and dev > tolerance
            asy[a.value] = {"value_J": val, "compares_to": "total" if thermal else a.component,
                            "rel_dev": _json_value(dev), "in_regime": inside, "flagged": flagged}
            if inside:
                summ = summary[a.value]
                summ["points_in_regime"] += 1
                summ["flagged"] += int(flagged)
                prev = summ["max_rel_dev_in_regime"]
                summ["max_rel_dev_in_regime"] = dev if prev is None else max(prev, dev)
        entry["asymptotes"] = asy
        if not thermal:
            entry["best_total_asymptote"] = min(
                TOTAL_FORMS, key=lambda a: asy[a.value]["rel_dev"] if asy[a.value]["rel_dev"] is not None else math.inf
            ).value
        rows.append(entry)

    good = [r for r in rows if "U_total_J" in r]
    growth = None
    if len(good) >= 2 and good[0]["U_total_J"] != 0:
        growth = good[-1]["U_total_J"] / good[0]["U_total_J"] - 1.0
    return {
        "schema": 1,
        "species": s0.species.name,
        "surface": getattr(s0.surface, "name", type(s0.surface).__name__),
        "surface_is_perfect": isinstance(s0.surface, PerfectReflector),
        "z_A_m": s0.z_A,
        "z_omega_over_c": beta,
        "T_omega_K": temps.T_omega,
        "T_z_K": temps.T_z,
        "tolerance": tolerance,
        "relative_growth": growth,
        "n_flagged": sum(v["flagged"] for v in summary.values()),
        "summary": summary,
        "rows": rows,
    }


__all__ = [
    "SweepSpec",
    "SweepTable",
    "run_sweep",
    "compare_asymptotics",
    "columns_for",
    "evaluate_point",
]
