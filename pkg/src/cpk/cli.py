"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 when at least one
grid point failed numerically (the row is kept, with its error column set).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from cpk.core import Asymptote, casimir_energy_dilute
from cpk.errors import ConfigError, ContractError, CPKError
from cpk.io import bundled_materials, load_scenario, load_species
from cpk.material import PerfectReflector
from cpk.sweep import SweepSpec, compare_asymptotics, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _asymptote_list(text: str) -> tuple:
    names = tuple(a.strip() for a in text.split(",") if a.strip())
    for a in names:
        try:
            Asymptote(a)
        except ValueError:
            valid = ", ".join(x.value for x in Asymptote)
            raise argparse.ArgumentTypeError(f"unknown asymptote {a!r} (valid: {valid})") from None
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cpk", description="Thermal Casimir-Polder potentials near metal surfaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="tabulate the potential along temperature or distance")
    s.add_argument("--scenario", required=True, type=Path)
    s.add_argument("--axis", required=True, choices=["temperature", "distance"])
    s.add_argument("--min", required=True, type=float, dest="vmin")
    s.add_argument("--max", required=True, type=float, dest="vmax")
    s.add_argument("--points", required=True, type=int)
    s.add_argument("--spacing", default="linear", choices=["linear", "log"])
    s.add_argument("--out", type=Path, help="output file (default: stdout)")
    s.add_argument("--format", default="csv", choices=["csv", "json"])
    s.add_argument("--asymptotes", type=_asymptote_list, default=(),
                   help="comma-separated closed forms, e.g. eq9,eq10,eq11,eq17")
    s.add_argument("--per-transition", action="store_true")
    s.add_argument("--paths", default="",
                   help="extra evaluation paths to add as columns: exact, closed or exact,closed")

    c = sub.add_parser("compare", help="exact potential against the closed-form limits")
    c.add_argument("--scenario", required=True, type=Path)
    c.add_argument("--tmin", required=True, type=float)
    c.add_argument("--tmax", required=True, type=float)
    c.add_argument("--points", required=True, type=int)
    c.add_argument("--tolerance", type=float, default=0.01)
    c.add_argument("--out", type=Path)

    k = sub.add_parser("casimir", help="energy per area of a dilute half-space of molecules")
    k.add_argument("--species", required=True, help="species file or bundled species name")
    k.add_argument("--eta", required=True, type=float, help="number density in 1/m^3")
    k.add_argument("--z", required=True, type=float, help="gap width in m")
    k.add_argument("--T", required=True, type=float, help="temperature in K")
    k.add_argument("--surface", default="perfect", help="bundled material name")
    return p


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _cmd_sweep(args) -> int:
    paths = {x.strip() for x in args.paths.split(",") if x.strip()}
    if not paths <= {"exact", "closed"}:
        raise ConfigError(f"--paths accepts exact and/or closed, got {args.paths!r}")
    outputs = set(paths) | {"regime"}
    if args.asymptotes:
        outputs.add("asymptotes")
    if args.per_transition:
        outputs.add("per_transition")
    spec = SweepSpec(axis=args.axis, min=args.vmin, max=args.vmax, points=args.points,
                     spacing=args.spacing, outputs=frozenset(outputs), asymptotes=args.asymptotes)
    template = load_scenario(args.scenario)
    if "closed" in paths and not isinstance(template.surface, PerfectReflector):
        raise ConfigError("closed path needs a perfect-reflector surface")
    table = run_sweep(template, spec)
    _write(table.to_csv() if args.format == "csv" else table.to_json(), args.out)
    if table.failed:
        print(f"cpk: {table.failed} of {len(table.rows)} points failed; see the error column",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_compare(args) -> int:
    if args.points < 2 or not args.tmin < args.tmax or args.tmin < 0:
        raise ConfigError("need 0 <= tmin < tmax and points >= 2")
    if not args.tolerance > 0:
        raise ConfigError("tolerance must be positive")
    scenario = load_scenario(args.scenario)
    if not isinstance(scenario.surface, PerfectReflector):
        raise ConfigError("asymptote comparison needs a perfect-reflector surface")
    grid = np.linspace(args.tmin, args.tmax, args.points)
    report = compare_asymptotics(scenario, grid, args.tolerance)
    _write(json.dumps(report, indent=1) + "\n", args.out)
    return EXIT_PARTIAL if any("error" in r for r in report["rows"]) else EXIT_OK


def _cmd_casimir(args) -> int:
    species = load_species(args.species)
    materials = bundled_materials()
    if args.surface not in materials:
        raise ConfigError(f"unknown surface {args.surface!r} (known: {', '.join(sorted(materials))})")
    if not (args.eta > 0 and args.z > 0 and args.T >= 0):
        raise ConfigError("need eta > 0, z > 0 and T >= 0")
    res = casimir_energy_dilute(species, materials[args.surface], args.z, args.T, args.eta)
    out = {
        "species": species.name,
        "surface": args.surface,
        "z_m": args.z,
        "T_K": args.T,
        "eta_per_m3": args.eta,
        "energy_closed_J_per_m2": res.closed,
        "energy_numerical_J_per_m2": res.numerical,
        "rel_diff": res.rel_diff,
        "z_cut_m": res.z_cut,
        "molecule_regime": res.molecule_regime,
    }
    print(json.dumps(out, indent=1))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"sweep": _cmd_sweep, "compare": _cmd_compare, "casimir": _cmd_casimir}[args.command]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return handler(args)
    except (ConfigError, ContractError) as exc:
        print(f"cpk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CPKError as exc:
        print(f"cpk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
