"""Configuration-driven parameter sweeps with CSV persistence and manifests.

A sweep is a grid over one axis (delta2, kappa, temperature, eta), evaluated
for a list of scenarios (parameter overrides such as "no EPI" or "single
mode").  Each grid point runs a truncation ladder: the photon cutoff grows in
steps of two until the watched observables (mean photon numbers and, when
requested, the radiance witnesses) move by less than the policy tolerance,
or the cap is reached (the point is then flagged unconverged, never dropped).
Expensive outputs (rate decomposition, linewidths) are computed once, at the
converged truncation.

One CSV per scenario is written with a fixed column set, 12 significant
digits, and '#' metadata lines (units, the g1<->meV scale); unrequested
observables stay empty.  A JSON manifest records the configuration echo and
per-point truncations, convergence deltas, timings, and errors, so every row
is traceable.  Numeric columns are byte-reproducible across reruns of the
same configuration.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .dynamics import emission_spectrum, steady_state
from .liouvillian import SystemParams, build_full_me, build_sme
from .observables import (
    flux_balance_check,
    photon_stats,
    rate_decomposition,
    rw_value,
)
from .operators import SpaceSpec
from .phonons import BathParams, calibrate_alpha_p

AXES = ("delta2", "kappa", "temperature", "eta")
OUTPUT_KINDS = ("stats", "rw", "eer", "linewidth")

COLUMNS = (
    "value", "n1", "n2", "pop_ee", "pop_eg", "pop_ge", "pop_gg",
    "g11", "g22", "g12", "re_cross", "im_cross",
    "n1_ref", "n2_ref", "rw1", "rw2",
    "N1", "M1", "N1M1", "N2", "M2",
    "linewidth1", "linewidth2",
    "truncation", "converged", "ss_residual", "flux_residual", "error",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TruncationPolicy:
    start: int = 4
    max_n: int = 8
    step: int = 2
    rel_tol: float = 0.01

    def ladder(self):
        n = self.start
        while n < self.max_n:
            yield n
            n += self.step
        yield self.max_n


@dataclass(frozen=True)
class Scenario:
    label: str
    overrides: dict = field(default_factory=dict)


@dataclass
class SweepConfig:
    base: dict                      # SystemParams field values (bath excluded)
    bath: dict | None               # BathParams fields; alpha_p may be "calibrated"
    axis: str
    grid: tuple
    scenarios: tuple
    outputs: tuple = ("stats", "rw")
    truncation: TruncationPolicy = TruncationPolicy()
    linewidth_stride: int = 1
    name: str = "sweep"

    def validate(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis '{self.axis}' (use one of {AXES})")
        grid = np.asarray(self.grid, dtype=float)
        if grid.size == 0:
            raise ConfigError("sweep grid is empty")
        if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
            raise ConfigError("sweep grid must be strictly monotonic")
        labels = [s.label for s in self.scenarios]
        if len(labels) != len(set(labels)):
            raise ConfigError("scenario labels must be unique")
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        for kind in self.outputs:
            if kind not in OUTPUT_KINDS:
                raise ConfigError(f"unknown output kind '{kind}'")
        if self.axis == "temperature":
            if self.bath is None:
                raise ConfigError("temperature sweep needs bath parameters")
            for s in self.scenarios:
                if s.overrides.get("no_epi"):
                    raise ConfigError("temperature sweep is meaningless for a no-EPI scenario")
        if self.linewidth_stride < 1:
            raise ConfigError("linewidth_stride must be >= 1")


def _resolved_bath(cfg_bath: dict | None, overrides: dict,
                   axis: str, value: float) -> BathParams | None:
    if overrides.get("no_epi"):
        return None
    if cfg_bath is None:
        return None
    bath = dict(cfg_bath)
    if "temperature" in overrides:
        bath["temperature"] = overrides["temperature"]
    if "alpha_p" in overrides:
        bath["alpha_p"] = overrides["alpha_p"]
    if axis == "temperature":
        bath["temperature"] = value
    alpha = bath.get("alpha_p", "calibrated")
    if alpha == "calibrated":
        alpha = calibrate_alpha_p(omega_b=bath.get("omega_b", 10.0),
                                  g1_mev=bath.get("g1_mev", 0.1))
    return BathParams(alpha_p=float(alpha),
                      omega_b=float(bath.get("omega_b", 10.0)),
                      temperature=float(bath.get("temperature", 5.0)),
                      g1_mev=float(bath.get("g1_mev", 0.1)))


def resolve_point_params(cfg: SweepConfig, scenario: Scenario, value: float) -> SystemParams:
    fields = dict(cfg.base)
    for key, v in scenario.overrides.items():
        if key in ("no_epi", "temperature", "alpha_p"):
            continue
        fields[key] = v
    if cfg.axis == "delta2":
        fields["delta2"] = value
    elif cfg.axis == "kappa":
        fields["kappa1"] = value
        fields["kappa2"] = value
    elif cfg.axis == "eta":
        fields["eta1"] = value
        fields["eta2"] = value
    bath = _resolved_bath(cfg.bath, scenario.overrides, cfg.axis, value)
    return SystemParams(bath=bath, **fields)


# ---------------------------------------------------------------------------
# point evaluation

def _watched(row: dict, want_rw: bool) -> list[float]:
    keys = ["n1", "n2"] + (["rw1", "rw2"] if want_rw else [])
    return [row.get(k) for k in keys]


def _rel_delta(curr, prev) -> float:
    worst = 0.0
    for a, b in zip(curr, prev):
        if a is None and b is None:
            continue
        if a is None or b is None:
            return math.inf
        scale = max(abs(a), abs(b), 1e-9)
        worst = max(worst, abs(a - b) / scale)
    return worst


def _stats_row(params: SystemParams, n_max: int, want_rw: bool) -> dict:
    space = SpaceSpec(n_emitters=2, n_max_1=n_max, n_max_2=n_max)
    me = build_full_me(params, space)
    ss = steady_state(me)
    st = photon_stats(ss.rho, space)
    row = {
        "n1": st.n1, "n2": st.n2,
        "pop_ee": st.pop_ee, "pop_eg": st.pop_eg, "pop_ge": st.pop_ge,
        "pop_gg": st.pop_gg, "g11": st.g11, "g22": st.g22, "g12": st.g12,
        "re_cross": st.cross.real, "im_cross": st.cross.imag,
        "ss_residual": ss.residual,
    }
    if want_rw:
        space1 = SpaceSpec(n_emitters=1, n_max_1=n_max, n_max_2=n_max)
        ss1 = steady_state(build_full_me(params, space1))
        st1 = photon_stats(ss1.rho, space1)
        row.update({"n1_ref": st1.n1, "n2_ref": st1.n2,
                    "rw1": rw_value(st.n1, st1.n1), "rw2": rw_value(st.n2, st1.n2)})
    row["_me"] = me
    row["_ss"] = ss
    return row


def convergence_check(params: SystemParams, policy: TruncationPolicy,
                      want_rw: bool) -> tuple[dict, int, float, bool]:
    """Grow the photon cutoff until the watched observables settle.

    Returns (row, chosen n_max, last relative delta, converged flag).
    """
    prev_row = None
    delta = math.inf
    for n in policy.ladder():
        row = _stats_row(params, n, want_rw)
        if prev_row is not None:
            delta = _rel_delta(_watched(row, want_rw), _watched(prev_row, want_rw))
            if delta < policy.rel_tol:
                return row, n, delta, True
        prev_row = row
    return prev_row, policy.max_n, delta, False


def evaluate_point(params: SystemParams, policy: TruncationPolicy,
                   outputs: tuple, want_linewidth: bool) -> dict:
    want_rw = "rw" in outputs
    row, n_max, delta, converged = convergence_check(params, policy, want_rw)
    me, ss = row.pop("_me"), row.pop("_ss")
    row.update({"truncation": n_max, "converged": int(converged),
                "_conv_delta": delta})
    space = me.space
    if "eer" in outputs:
        sme = build_sme(params, space)
        ss_sme = steady_state(sme)
        report = rate_decomposition(sme.channels, ss_sme.rho, space)
        st_sme = photon_stats(ss_sme.rho, space)
        row.update({"N1": report.N1, "M1": report.M1, "N1M1": report.N1M1,
                    "N2": report.N2, "M2": report.M2,
                    "flux_residual": flux_balance_check(report, st_sme, params)})
    if want_linewidth:
        for mode, key in ((1, "linewidth1"), (2, "linewidth2")):
            try:
                spec = emission_spectrum(me, ss, mode)
                row[key] = spec.fwhm
            except Exception:
                row[key] = None  # empty mode or non-decaying correlation
    return row


def _task(args):
    (si, pi, cfg, scen, value) = args
    t0 = time.perf_counter()
    try:
        params = resolve_point_params(cfg, scen, float(value))
        want_lw = ("linewidth" in cfg.outputs) and (pi % cfg.linewidth_stride == 0)
        row = evaluate_point(params, cfg.truncation, cfg.outputs, want_lw)
        row["error"] = ""
    except Exception as exc:  # point failures land in the CSV, not the sky
        row = {"error": f"{type(exc).__name__}: {exc}", "converged": 0}
    row["_wall_s"] = time.perf_counter() - t0
    return si, pi, row


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.11e}"


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in label)


@dataclass
class SweepResult:
    csv_paths: dict
    manifest_path: str
    n_errors: int
    n_unconverged: int


def run_sweep(cfg: SweepConfig, out_dir: str, workers: int | None = None) -> SweepResult:
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    if workers is None:
        workers = int(os.environ.get("BICAVITY_WORKERS", "1"))
    grid = np.asarray(cfg.grid, dtype=float)

    tasks = []
    for si, scen in enumerate(cfg.scenarios):
        for pi, value in enumerate(grid):
            tasks.append((si, pi, cfg, scen, float(value)))

    results: dict[tuple, dict] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for si, pi, row in pool.map(_task, tasks, chunksize=1):
                results[(si, pi)] = row
    else:
        for t in tasks:
            si, pi, row = _task(t)
            results[(si, pi)] = row

    csv_paths = {}
    manifest_points = []
    n_err = n_unconv = 0
    g1_mev = (cfg.bath or {}).get("g1_mev", 0.1)
    for si, scen in enumerate(cfg.scenarios):
        path = os.path.join(out_dir, f"{cfg.name}__{_slug(scen.label)}.csv")
        csv_paths[scen.label] = path
        with open(path, "w", newline="") as fh:
            fh.write(f"# bicavity {__version__} sweep '{cfg.name}'\n")
            fh.write(f"# scenario: {scen.label}\n")
            fh.write(f"# units: frequencies and rates in g1; temperature in kelvin; "
                     f"hbar*g1 = {g1_mev} meV\n")
            writer = csv.writer(fh)
            writer.writerow(COLUMNS)
            for pi, value in enumerate(grid):
                row = results[(si, pi)]
                if row.get("error"):
                    n_err += 1
                if not row.get("converged", 0):
                    n_unconv += 1
                out = {"value": float(value), **row}
                writer.writerow([_fmt(out.get(c)) if c != "error" else out.get("error", "")
                                 for c in COLUMNS])
                manifest_points.append({
                    "scenario": scen.label, "value": float(value),
                    "truncation": row.get("truncation"),
                    "converged": bool(row.get("converged", 0)),
                    "convergence_delta": row.get("_conv_delta"),
                    "wall_s": row.get("_wall_s"),
                    "error": row.get("error", ""),
                })

    manifest = {
        "version": __version__,
        "config": {
            "name": cfg.name, "axis": cfg.axis, "grid": [float(v) for v in grid],
            "base": cfg.base, "bath": cfg.bath,
            "scenarios": [{"label": s.label, "overrides": s.overrides}
                          for s in cfg.scenarios],
            "outputs": list(cfg.outputs),
            "truncation": asdict(cfg.truncation),
            "linewidth_stride": cfg.linewidth_stride,
        },
        "workers": workers,
        "points": manifest_points,
    }
    manifest_path = os.path.join(out_dir, f"{cfg.name}__manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1, default=str)
    return SweepResult(csv_paths=csv_paths, manifest_path=manifest_path,
                       n_errors=n_err, n_unconverged=n_unconv)
