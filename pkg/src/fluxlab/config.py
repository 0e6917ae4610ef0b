"""Experiment configuration: INI-style sections with strict validation.

Sections::

    [surface]       kind, half_width, collar_depth, tube_epsilon
    [integrator]    steps_per_unit, quad_order, quad_panels,
                    quad_panels_x, quad_panels_y
    [tolerances]    default, transgression
    [fields]        name = expression   (parsed eagerly; variables x,y,t,theta)
    [experiment N]  type = flux | calabi | swept-area | cocycle |
                    transgression | cell-division, plus per-type keys

Unknown sections or keys are rejected with their location; expressions are
parsed at load time so syntax errors surface before anything runs.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dc_field
from typing import Optional

from . import fieldexpr as fe

__all__ = ["ConfigError", "RunSettings", "ExperimentSpec", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    pass


_SURFACE_KEYS = {"kind", "half_width", "collar_depth", "tube_epsilon"}
_INTEGRATOR_KEYS = {"steps_per_unit", "quad_order", "quad_panels",
                    "quad_panels_x", "quad_panels_y"}
_TOLERANCE_KEYS = {"default", "transgression"}
_EXPERIMENT_TYPES = {"flux", "calabi", "swept-area", "cocycle",
                     "transgression", "cell-division"}
_EXPERIMENT_KEYS = {
    "flux": {"type", "map", "t", "lambda"},
    "calabi": {"type", "amplitude", "radius", "center"},
    "swept-area": {"type", "pairs"},
    "cocycle": {"type", "triples", "pairs", "rot_pairs", "n_iter", "seed"},
    "transgression": {"type", "pairs", "seed", "fields"},
    "cell-division": {"type", "target"},
}


@dataclass
class RunSettings:
    kind: str = "mobius"
    half_width: float = 0.5
    collar_depth: Optional[float] = None
    tube_epsilon: float = 0.125
    steps_per_unit: int = 128
    quad_order: int = 8
    quad_panels: int = 64
    quad_panels_x: int = 16
    quad_panels_y: int = 48
    tol: float = 1e-6
    tol_transgression: float = 2e-5
    seed: int = 20260809
    fields: dict = dc_field(default_factory=dict)


@dataclass
class ExperimentSpec:
    name: str
    type: str
    params: dict


@dataclass
class ExperimentConfig:
    settings: RunSettings
    experiments: list[ExperimentSpec]


def _check_keys(section: str, present, allowed) -> None:
    unknown = set(present) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section [{section}]; "
            f"allowed: {sorted(allowed)}"
        )


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    settings = RunSettings()
    experiments: list[ExperimentSpec] = []

    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "surface":
            _check_keys(section, items, _SURFACE_KEYS)
            settings.kind = items.get("kind", settings.kind)
            if settings.kind not in ("disk", "annulus", "mobius"):
                raise ConfigError(f"[surface] kind must be disk, annulus or mobius, got {settings.kind!r}")
            settings.half_width = _as_float(section, "half_width", items, settings.half_width)
            if "collar_depth" in items:
                settings.collar_depth = _as_float(section, "collar_depth", items, 0.0)
            settings.tube_epsilon = _as_float(section, "tube_epsilon", items, settings.tube_epsilon)
        elif section == "integrator":
            _check_keys(section, items, _INTEGRATOR_KEYS)
            settings.steps_per_unit = _as_int(section, "steps_per_unit", items, settings.steps_per_unit)
            settings.quad_order = _as_int(section, "quad_order", items, settings.quad_order)
            settings.quad_panels = _as_int(section, "quad_panels", items, settings.quad_panels)
            settings.quad_panels_x = _as_int(section, "quad_panels_x", items, settings.quad_panels_x)
            settings.quad_panels_y = _as_int(section, "quad_panels_y", items, settings.quad_panels_y)
        elif section == "tolerances":
            _check_keys(section, items, _TOLERANCE_KEYS)
            settings.tol = _as_float(section, "default", items, settings.tol)
            settings.tol_transgression = _as_float(section, "transgression", items,
                                                   settings.tol_transgression)
        elif section == "fields":
            for name, src in items.items():
                try:
                    settings.fields[name] = fe.parse(src)
                except fe.ParseError as exc:
                    raise ConfigError(f"[fields] {name}: {exc}") from exc
        elif section.startswith("experiment"):
            name = section[len("experiment"):].strip() or f"exp{len(experiments)}"
            etype = items.get("type")
            if etype not in _EXPERIMENT_TYPES:
                raise ConfigError(
                    f"[{section}] type must be one of {sorted(_EXPERIMENT_TYPES)}, got {etype!r}"
                )
            _check_keys(section, items, _EXPERIMENT_KEYS[etype])
            experiments.append(ExperimentSpec(name, etype, dict(items)))
        else:
            raise ConfigError(f"unknown section [{section}]")

    _resolve_field_references(settings, experiments)
    return ExperimentConfig(settings, experiments)


def _resolve_field_references(settings: RunSettings, experiments) -> None:
    for exp in experiments:
        names = exp.params.get("fields")
        if not names:
            continue
        for name in [n.strip() for n in names.split(",") if n.strip()]:
            if name not in settings.fields:
                raise ConfigError(
                    f"experiment {exp.name!r} references field {name!r}, "
                    f"which is not defined in [fields]"
                )


def _as_float(section, key, items, default) -> float:
    if key not in items:
        return default
    try:
        return float(items[key])
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {items[key]!r}")


def _as_int(section, key, items, default) -> int:
    if key not in items:
        return default
    try:
        return int(items[key])
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be an integer, got {items[key]!r}")
