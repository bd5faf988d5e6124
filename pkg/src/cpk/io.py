"""Loading of species, material and scenario files.

All three share one YAML dialect with a mandatory ``schema: 1`` field at the
top level.  Unknown keys are rejected and every error carries the file name
and line number of the offending node.

Species::

    schema: 1
    name: LiH
    levels: [{energy_J: 0.0}, {energy_J: 2.9e-22}]
    transitions: [{from: 0, to: 1, d2_debye2: 11.5}]
    preparation: ground          # | thermal | {eigenstate: 1}

Materials::

    schema: 1
    materials:
      - {name: Au, model: drude, omega_p: 1.37e16, gamma: 4.05e13}

Scenario::

    schema: 1
    species: LiH                 # bundled name, inline mapping, or {file: path}
    surface: perfect             # material name or inline {model: drude, ...}
    z_A: 5.0e-6
    T: 300
    tolerances: {rel_tol: 1.0e-9}
    species_db: my_species.yaml  # optional, searched before the bundled list
    materials_db: my_mats.yaml   # optional
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from cpk.core import Scenario
from cpk.errors import ConfigError
from cpk.material import Drude, PerfectReflector
from cpk.numerics import Tolerances
from cpk.spectrum import Coupling, Eigenstate, SpeciesState, ThermalEnsemble
from cpk.units import debye2_to_si

SCHEMA_VERSION = 1


class Mapping(dict):
    """dict that remembers where it and each of its keys came from."""

    line: int = 0
    key_lines: dict


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = Mapping()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        out[key] = loader.construct_object(value_node, deep=True)
        out.key_lines[key] = key_node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
# YAML 1.1 reads 1e-6 and 1.37e16 as strings; accept the 1.2 float syntax
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)?(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789."),
)


class _Ctx:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, msg, key=None):
        line = None
        if isinstance(node, Mapping):
            line = node.key_lines.get(key, node.line) if key is not None else node.line
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {msg}")

    def mapping(self, node, what, allowed, required=()):
        if not isinstance(node, dict):
            self.fail(None, f"{what} must be a mapping")
        for k in node:
            if k not in allowed:
                self.fail(node, f"unknown key {k!r} in {what}", k)
        for k in required:
            if k not in node:
                self.fail(node, f"missing key {k!r} in {what}")
        return node

    def number(self, node, key, what, positive=False, nonneg=False):
        v = node[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(node, f"{what}.{key} must be a number", key)
        v = float(v)
        if positive and not v > 0:
            self.fail(node, f"{what}.{key} must be positive", key)
        if nonneg and not v >= 0:
            self.fail(node, f"{what}.{key} must be non-negative", key)
        return v


def _read(path) -> tuple:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    return _parse(text, str(path))


def _parse(text: str, source: str):
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark else ""
        raise ConfigError(f"{source}{line}: YAML error: {exc}") from exc
    ctx = _Ctx(source)
    if not isinstance(doc, dict):
        ctx.fail(None, "top level must be a mapping")
    if doc.get("schema") != SCHEMA_VERSION:
        ctx.fail(doc, f"expected 'schema: {SCHEMA_VERSION}'", "schema")
    return doc, ctx


# ---------------------------------------------------------------------------
# species


def _preparation(ctx, node, key, n_levels):
    v = node.get(key, "ground")
    if v == "ground":
        return Eigenstate(0)
    if v == "thermal":
        return ThermalEnsemble()
    if isinstance(v, dict):
        ctx.mapping(v, "preparation", {"eigenstate"}, ("eigenstate",))
        n = v["eigenstate"]
        if isinstance(n, bool) or not isinstance(n, int) or not 0 <= n < n_levels:
            ctx.fail(v, "preparation.eigenstate must be a valid level index", "eigenstate")
        return Eigenstate(n)
    ctx.fail(node, "preparation must be 'ground', 'thermal' or {eigenstate: n}", key)


def species_from_mapping(node, ctx: _Ctx) -> SpeciesState:
    ctx.mapping(node, "species", {"schema", "name", "levels", "transitions", "preparation"},
                ("name", "levels", "transitions"))
    levels = node["levels"]
    if not isinstance(levels, list) or len(levels) < 2:
        ctx.fail(node, "levels must be a list of at least two entries", "levels")
    energies = []
    for lv in levels:
        ctx.mapping(lv, "level", {"energy_J"}, ("energy_J",))
        energies.append(ctx.number(lv, "energy_J", "level"))
    trs = node["transitions"]
    if not isinstance(trs, list) or not trs:
        ctx.fail(node, "transitions must be a non-empty list", "transitions")
    couplings = []
    for t in trs:
        ctx.mapping(t, "transition", {"from", "to", "d2_debye2"}, ("from", "to", "d2_debye2"))
        for k in ("from", "to"):
            if isinstance(t[k], bool) or not isinstance(t[k], int) or not 0 <= t[k] < len(energies):
                ctx.fail(t, f"transition.{k} must be a level index", k)
        if energies[t["from"]] == energies[t["to"]]:
            ctx.fail(t, "transition joins two levels of equal energy")
        d2 = ctx.number(t, "d2_debye2", "transition", nonneg=True)
        couplings.append(Coupling(t["from"], t["to"], debye2_to_si(d2)))
    prep = _preparation(ctx, node, "preparation", len(energies))
    try:
        return SpeciesState(str(node["name"]), tuple(energies), tuple(couplings), prep)
    except ValueError as exc:
        ctx.fail(node, str(exc))


def _species_db(doc, ctx) -> dict:
    ctx.mapping(doc, "species database", {"schema", "species"}, ("species",))
    out = {}
    for entry in doc["species"]:
        sp = species_from_mapping(entry, ctx)
        out[sp.name] = sp
    return out


def bundled_species() -> dict:
    text = resources.files("cpk.data").joinpath("species.yaml").read_text()
    doc, ctx = _parse(text, "<bundled species.yaml>")
    return _species_db(doc, ctx)


def load_species(path) -> SpeciesState:
    """A single-species file, or a bundled species name when ``path`` is not a file."""
    p = Path(path)
    if not p.exists():
        db = bundled_species()
        if str(path) in db:
            return db[str(path)]
        raise ConfigError(f"{path}: no such file and no bundled species of that name "
                          f"(bundled: {', '.join(sorted(db))})")
    doc, ctx = _read(p)
    return species_from_mapping(doc, ctx)


# ---------------------------------------------------------------------------
# materials


def material_from_mapping(node, ctx: _Ctx):
    ctx.mapping(node, "material", {"name", "model", "omega_p", "gamma"}, ("model",))
    model = node["model"]
    name = str(node.get("name", model))
    if model == "perfect":
        for k in ("omega_p", "gamma"):
            if k in node:
                ctx.fail(node, f"perfect reflector takes no {k!r}", k)
        return PerfectReflector(name=name)
    if model == "drude":
        if "omega_p" not in node:
            ctx.fail(node, "drude material needs omega_p")
        wp = ctx.number(node, "omega_p", "material", positive=True)
        gamma = ctx.number(node, "gamma", "material", nonneg=True) if "gamma" in node else 0.0
        return Drude(omega_p=wp, gamma=gamma, name=name)
    ctx.fail(node, f"unknown material model {model!r} (expected 'perfect' or 'drude')", "model")


def _materials_db(doc, ctx) -> dict:
    ctx.mapping(doc, "materials database", {"schema", "materials"}, ("materials",))
    out = {}
    for entry in doc["materials"]:
        m = material_from_mapping(entry, ctx)
        out[m.name] = m
    return out


def bundled_materials() -> dict:
    text = resources.files("cpk.data").joinpath("materials.yaml").read_text()
    doc, ctx = _parse(text, "<bundled materials.yaml>")
    return _materials_db(doc, ctx)


def load_materials(path) -> dict:
    doc, ctx = _read(path)
    return _materials_db(doc, ctx)


# ---------------------------------------------------------------------------
# scenario

_TOL_KEYS = {"rel_tol", "abs_floor", "max_matsubara_terms", "max_quad_depth"}


def _tolerances(node, ctx) -> Tolerances:
    ctx.mapping(node, "tolerances", _TOL_KEYS)
    kwargs = {}
    for k in ("rel_tol", "abs_floor"):
        if k in node:
            kwargs[k] = ctx.number(node, k, "tolerances")
    for k in ("max_matsubara_terms", "max_quad_depth"):
        if k in node:
            if isinstance(node[k], bool) or not isinstance(node[k], int):
                ctx.fail(node, f"tolerances.{k} must be an integer", k)
            kwargs[k] = node[k]
    try:
        return Tolerances(**kwargs)
    except ValueError as exc:
        ctx.fail(node, str(exc))


def scenario_from_mapping(doc, ctx: _Ctx, base_dir: Optional[Path] = None) -> Scenario:
    ctx.mapping(doc, "scenario",
                {"schema", "species", "surface", "z_A", "T", "tolerances",
                 "species_db", "materials_db"},
                ("species", "surface", "z_A", "T"))
    base_dir = base_dir or Path.cwd()

    species_db = bundled_species()
    if "species_db" in doc:
        sdoc, sctx = _read(base_dir / str(doc["species_db"]))
        species_db.update(_species_db(sdoc, sctx))
    materials_db = bundled_materials()
    if "materials_db" in doc:
        materials_db.update(load_materials(base_dir / str(doc["materials_db"])))

    sp = doc["species"]
    if isinstance(sp, str):
        if sp not in species_db:
            ctx.fail(doc, f"unknown species {sp!r} (known: {', '.join(sorted(species_db))})", "species")
        species = species_db[sp]
    elif isinstance(sp, dict) and set(sp) == {"file"}:
        species = load_species(base_dir / str(sp["file"]))
    else:
        species = species_from_mapping(sp, ctx)

    sf = doc["surface"]
    if isinstance(sf, str):
        if sf not in materials_db:
            ctx.fail(doc, f"unknown material {sf!r} (known: {', '.join(sorted(materials_db))})", "surface")
        surface = materials_db[sf]
    else:
        surface = material_from_mapping(sf, ctx)

    z_A = ctx.number(doc, "z_A", "scenario", positive=True)
    T = ctx.number(doc, "T", "scenario", nonneg=True)
    tol = _tolerances(doc["tolerances"], ctx) if "tolerances" in doc else Tolerances()
    return Scenario(species=species, surface=surface, z_A=z_A, T=T, tolerances=tol)


def load_scenario(path) -> Scenario:
    path = Path(path)
    doc, ctx = _read(path)
    return scenario_from_mapping(doc, ctx, path.parent)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    doc, ctx = _parse(text, source)
    return scenario_from_mapping(doc, ctx)
