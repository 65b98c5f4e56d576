"""TOML sweep configuration loader.

Schema (all frequencies in g1 units, temperature in kelvin):

    axis = "delta2"            # delta2 | kappa | temperature | eta
    name = "my_sweep"          # optional, used in output filenames

    [grid]                     # either values or min/max/points
    min = -5.0
    max = 25.0
    points = 61
    # values = [0.0, 1.0, 2.5]

    [base]                     # SystemParams fields
    g1 = 1.0
    delta1 = 10.0
    ...

    [bath]                     # omit for a globally phonon-free run
    omega_b = 20.0
    temperature = 5.0
    g1_mev = 0.05
    alpha_p = "calibrated"     # or a number in 1/g1^2

    [truncation]
    start = 4
    max = 8
    step = 2
    rel_tol = 0.01

    [outputs]
    set = ["stats", "rw", "eer", "linewidth"]
    linewidth_stride = 1

    [[scenarios]]
    label = "T=5K"

    [[scenarios]]
    label = "no_epi"
    no_epi = true
"""

from __future__ import annotations

import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .liouvillian import SystemParams
from .sweeps import ConfigError, Scenario, SweepConfig, TruncationPolicy

_PARAM_FIELDS = {f for f in SystemParams.__dataclass_fields__ if f != "bath"}
_SCENARIO_EXTRA = {"no_epi", "temperature", "alpha_p"}


def _parse_grid(table: dict):
    if "values" in table:
        return tuple(float(v) for v in table["values"])
    try:
        lo, hi, n = table["min"], table["max"], int(table["points"])
    except KeyError as exc:
        raise ConfigError("grid needs either 'values' or min/max/points") from exc
    if n < 1:
        raise ConfigError("grid points must be >= 1")
    return tuple(np.linspace(float(lo), float(hi), n))


def load_config(path: str) -> SweepConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    try:
        axis = raw["axis"]
        grid = _parse_grid(raw["grid"])
    except KeyError as exc:
        raise ConfigError(f"missing required key: {exc}") from exc

    base = dict(raw.get("base", {}))
    unknown = set(base) - _PARAM_FIELDS
    if unknown:
        raise ConfigError(f"unknown base parameter(s): {sorted(unknown)}")

    scenarios = []
    for entry in raw.get("scenarios", [{"label": "default"}]):
        entry = dict(entry)
        try:
            label = entry.pop("label")
        except KeyError as exc:
            raise ConfigError("every scenario needs a label") from exc
        unknown = set(entry) - _PARAM_FIELDS - _SCENARIO_EXTRA
        if unknown:
            raise ConfigError(f"scenario '{label}': unknown override(s) {sorted(unknown)}")
        scenarios.append(Scenario(label, entry))

    tr = raw.get("truncation", {})
    policy = TruncationPolicy(start=int(tr.get("start", 4)),
                              max_n=int(tr.get("max", 8)),
                              step=int(tr.get("step", 2)),
                              rel_tol=float(tr.get("rel_tol", 0.01)))
    out = raw.get("outputs", {})
    cfg = SweepConfig(
        base=base, bath=raw.get("bath"), axis=axis, grid=grid,
        scenarios=tuple(scenarios),
        outputs=tuple(out.get("set", ["stats", "rw"])),
        truncation=policy,
        linewidth_stride=int(out.get("linewidth_stride", 1)),
        name=raw.get("name", "sweep"),
    )
    cfg.validate()
    return cfg
