"""Scenario files: a single TOML document fully determines a run.

Sections (all optional unless noted):

  [system]        preset = "center-center" | "saddle-center" | "smooth-circle"
                  or explicit h_plus / h_minus expression strings; a_param
                  for the saddle-center stretch; name for labeling.
  [perturbation.upper] / [perturbation.lower]
                  f1, g1, f2, g2 expression strings in x, y.
  [boundary]      f expression in x; epsilon.
  [annulus]       r_min, r_max, section_bracket = [lo, hi].
  [level_map]     plus, minus expression strings in r.
  [sweep]         grid, order, window = [lo, hi].
  [roots]         polynomial = [c0, c1, ...] (ascending coefficients),
                  variable = "h" | "r", window = [lo, hi].
  [simulate]      r, epsilon_ladder = [...].
  [classify]      x or x = [x1, x2, ...].
  [verify]        epsilon.
  [tolerances]    any field of the Tolerances configuration.

Validation errors raise ScenarioError; the annulus window is checked by
locating the section point at both ends before any analysis runs.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:        # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field as dfield
from typing import Optional

from .config import DEFAULT, Tolerances
from .errors import AnalysisError, ParseError, ScenarioError
from .field import ScalarField
from .melnikov import (BoundaryPerturbation, LevelMap, PiecewiseSystem,
                       ZonePerturbation)
from .orbit import AnnulusWindow
from .presets import PRESETS, make as make_preset


@dataclass
class Scenario:
    system: PiecewiseSystem
    tolerances: Tolerances
    sweep: dict = dfield(default_factory=dict)
    roots: dict = dfield(default_factory=dict)
    simulate: dict = dfield(default_factory=dict)
    classify: dict = dfield(default_factory=dict)
    verify: dict = dfield(default_factory=dict)
    raw: dict = dfield(default_factory=dict)


def _fail(msg):
    raise ScenarioError(msg)


def _parse_field(text, varnames, where):
    if not isinstance(text, str):
        _fail(f"{where}: expected an expression string, got {text!r}")
    try:
        return ScalarField(text, varnames)
    except ParseError as exc:
        _fail(f"{where}: cannot parse {text!r}: {exc}")


def _zone_perturbation(section, where):
    def get(key):
        text = section.get(key)
        if text is None:
            return ScalarField("0", ("x", "y"))
        return _parse_field(text, ("x", "y"), f"{where}.{key}")
    return ZonePerturbation(get("f1"), get("g1"), get("f2"), get("g2"))


def _number(section, key, where, default=None):
    v = section.get(key, default)
    if v is None:
        _fail(f"{where}: missing required key {key!r}")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        _fail(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _pair(section, key, where, default=None):
    v = section.get(key, default)
    if v is None:
        return None
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(u, (int, float)) for u in v)):
        _fail(f"{where}.{key}: expected a two-number list, got {v!r}")
    return (float(v[0]), float(v[1]))


def _build_explicit_system(data):
    sys_sec = data.get("system", {})
    h_plus = _parse_field(sys_sec.get("h_plus"), ("x", "y"), "system.h_plus") \
        if "h_plus" in sys_sec else _fail("system: h_plus required without a preset")
    h_minus = _parse_field(sys_sec.get("h_minus"), ("x", "y"), "system.h_minus") \
        if "h_minus" in sys_sec else _fail("system: h_minus required without a preset")

    lm_sec = data.get("level_map")
    if lm_sec is None:
        _fail("level_map section is required without a preset")
    level_map = LevelMap(_parse_field(lm_sec.get("plus"), ("r",), "level_map.plus"),
                         _parse_field(lm_sec.get("minus"), ("r",), "level_map.minus"))

    an_sec = data.get("annulus")
    if an_sec is None:
        _fail("annulus section is required without a preset")
    r_min = _number(an_sec, "r_min", "annulus")
    r_max = _number(an_sec, "r_max", "annulus")
    bracket = _pair(an_sec, "section_bracket", "annulus",
                    default=[1e-3, 10.0])
    annulus = AnnulusWindow(r_min, r_max, bracket)

    pert = data.get("perturbation", {})
    upper = _zone_perturbation(pert.get("upper", {}), "perturbation.upper")
    lower = _zone_perturbation(pert.get("lower", {}), "perturbation.lower")

    boundary = _build_boundary(data)
    return PiecewiseSystem(h_plus=h_plus, h_minus=h_minus, upper=upper,
                           lower=lower, annulus=annulus, level_map=level_map,
                           boundary=boundary,
                           name=sys_sec.get("name", "scenario"))


def _build_boundary(data):
    b_sec = data.get("boundary")
    if b_sec is None:
        return None
    f = _parse_field(b_sec.get("f"), ("x",), "boundary.f")
    eps = _number(b_sec, "epsilon", "boundary", default=0.01)
    return BoundaryPerturbation(f, eps)


def _build_preset_system(preset_name, data):
    if preset_name not in PRESETS:
        _fail(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
    kwargs = {}
    sys_sec = data.get("system", {})
    if preset_name == "saddle-center" and "a_param" in sys_sec:
        kwargs["a_param"] = _number(sys_sec, "a_param", "system")
    b_sec = data.get("boundary")
    if b_sec is not None:
        if "f" in b_sec:
            _parse_field(b_sec["f"], ("x",), "boundary.f")   # validate early
            kwargs["boundary_f"] = b_sec["f"]
        kwargs["epsilon"] = _number(b_sec, "epsilon", "boundary", default=0.01)
    an_sec = data.get("annulus", {})
    if "r_min" in an_sec:
        kwargs["r_min"] = _number(an_sec, "r_min", "annulus")
    if "r_max" in an_sec:
        kwargs["r_max"] = _number(an_sec, "r_max", "annulus")
    pert = data.get("perturbation", {})
    if preset_name in ("center-center", "smooth-circle") and pert:
        kwargs["upper"] = _zone_perturbation(pert.get("upper", {}),
                                             "perturbation.upper")
        kwargs["lower"] = _zone_perturbation(pert.get("lower", {}),
                                             "perturbation.lower")
    try:
        return make_preset(preset_name, **kwargs)
    except TypeError as exc:
        _fail(f"preset {preset_name!r} rejected scenario options: {exc}")


def _tolerances(data):
    tol_sec = data.get("tolerances", {})
    if not tol_sec:
        return DEFAULT
    valid = set(Tolerances.__dataclass_fields__)
    unknown = set(tol_sec) - valid
    if unknown:
        _fail(f"tolerances: unknown keys {sorted(unknown)}")
    return DEFAULT.with_overrides(**tol_sec)


def _validate_window(system, tol):
    """Locate the section point at both ends of the annulus window."""
    for r in (system.annulus.r_min, system.annulus.r_max):
        try:
            system.section_point(r, tol)
        except AnalysisError as exc:
            _fail(f"annulus window invalid at r = {r}: {exc}")


def load_scenario(path=None, preset=None, overrides=None) -> Scenario:
    """Build a validated Scenario from a TOML file and/or a preset name.

    overrides is a flat dict of CLI-level settings (epsilon, grid) that
    take precedence over the file.
    """
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            _fail(f"scenario file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            _fail(f"scenario file is not valid TOML: {exc}")
    if not isinstance(data, dict):
        _fail("scenario root must be a table")

    overrides = overrides or {}
    if overrides.get("epsilon") is not None:
        data.setdefault("boundary", {})
        data["boundary"]["epsilon"] = overrides["epsilon"]
    if overrides.get("grid") is not None:
        data.setdefault("sweep", {})
        data["sweep"]["grid"] = int(overrides["grid"])

    preset_name = preset or data.get("system", {}).get("preset")
    if preset_name is not None:
        system = _build_preset_system(preset_name, data)
    elif "system" in data:
        system = _build_explicit_system(data)
    else:
        _fail("no preset named and no [system] section present")

    tol = _tolerances(data)
    _validate_window(system, tol)
    return Scenario(system=system, tolerances=tol,
                    sweep=data.get("sweep", {}),
                    roots=data.get("roots", {}),
                    simulate=data.get("simulate", {}),
                    classify=data.get("classify", {}),
                    verify=data.get("verify", {}),
                    raw=data)
