"""Experiment configuration files.

A config names an integrand, a decision box, the random vector (a list of
primitive laws plus an optional transform chain) and one section per
command it supports, e.g.::

    {"name": "example2",
     "integrand": "((w1-10)^2*ln(x1)+(x1-5)^2)/w1",
     "x_box": [[24, 26]],
     "law": [{"kind": "uniform", "lo": 10, "hi": 13}],
     "convergence": {"x": [25], "K": 100, "eps": [1, 0.5]}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, JMCError
from .expr import ExprGraph, parse
from .interval import Box
from .rvtransform import FactorableRV, from_config as rv_from_config

BUILTIN = ("example1", "example2", "example3")
SECTIONS = ("surface", "convergence", "bounds")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    source: str
    integrand: ExprGraph
    x_box: Box
    rv: FactorableRV
    seed: int = 0
    sections: dict = field(default_factory=dict)

    @property
    def relaxed_integrand(self) -> ExprGraph:
        """The integrand over gamma space, ``f(x, psi(gamma))``."""
        return self.rv.transform(self.integrand)

    def section(self, name: str) -> dict:
        if name not in self.sections:
            raise ConfigError(f"{self.name}: no '{name}' section")
        return self.sections[name]


def _read(ref: str) -> tuple[str, str]:
    if ref in BUILTIN and not Path(ref).exists():
        text = resources.files("jmc.configs").joinpath(f"{ref}.json").read_text("utf-8")
        return text, f"<builtin {ref}>"
    try:
        return Path(ref).read_text("utf-8"), ref
    except OSError as exc:
        raise ConfigError(f"cannot read config {ref!r}: {exc.strerror}") from exc


def _box(value, what: str) -> Box:
    try:
        return Box([(float(a), float(b)) for a, b in value])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: expected a list of [lo, hi] pairs ({exc})") from exc


def loads(text: str, origin: str = "<string>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{origin}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{origin}: top level must be an object")
    for key in ("integrand", "x_box"):
        if key not in raw:
            raise ConfigError(f"{origin}: missing key '{key}'")
    unknown = set(raw) - {"name", "integrand", "x_box", "law", "transforms", "seed",
                          "description", *SECTIONS}
    if unknown:
        raise ConfigError(f"{origin}: unknown keys {sorted(unknown)}")
    x_box = _box(raw["x_box"], f"{origin}: x_box")
    try:
        rv = rv_from_config(raw.get("law", []), raw.get("transforms", []))
        g = parse(raw["integrand"], n_x=len(x_box), n_w=rv.n_omega)
    except JMCError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    sections = {k: raw[k] for k in SECTIONS if k in raw}
    for k, sec in sections.items():
        if not isinstance(sec, dict):
            raise ConfigError(f"{origin}: section '{k}' must be an object")
    name = raw.get("name") or Path(origin).stem.strip("<>").replace("builtin ", "")
    return ExperimentConfig(name, raw["integrand"], g, x_box, rv,
                            int(raw.get("seed", 0)), sections)


def load(ref: str) -> ExperimentConfig:
    """Load a config file, or one of the bundled ``example1..3`` by name."""
    text, origin = _read(ref)
    return loads(text, origin)
