"""Render figure specs from sweep CSVs; reading is strictly read-only."""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .figspec import FigureSpec, PlotDataError, curve_values, read_sweep_csv, scenario_style


@dataclass
class RenderResult:
    files: list = field(default_factory=list)
    # (panel key, scenario, curve label) -> (x, y) arrays actually plotted
    series: dict = field(default_factory=dict)

    def series_keys(self):
        return sorted(self.series)


def discover_inputs(in_dir: str, name: str) -> dict:
    """Find '<name>__<scenario>.csv' files and key them by scenario label."""
    paths = sorted(glob.glob(os.path.join(in_dir, f"{name}__*.csv")))
    inputs = {}
    for path in paths:
        table = read_sweep_csv(path)
        inputs[table["scenario"]] = path
    if not inputs:
        raise PlotDataError(f"no '{name}__*.csv' inputs under {in_dir}")
    return inputs


def render(spec: FigureSpec, out_dir: str, formats=("png", "svg")) -> RenderResult:
    """One multi-panel figure per spec; returns the plotted data series.

    A curve appears in the output iff its columns exist and it carries at
    least one finite sample; rendering never mutates or reinterprets the
    numbers (data-level determinism).
    """
    if not spec.inputs:
        raise PlotDataError("figure spec has no input CSVs")
    tables = {}
    for label, path in spec.inputs.items():
        tables[label] = (read_sweep_csv(path), path)

    result = RenderResult()
    n_panels = len(spec.panels)
    fig, axes = plt.subplots(1, n_panels, figsize=(4.2 * n_panels, 3.4),
                             squeeze=False)
    for ax, panel in zip(axes[0], spec.panels):
        for label, (table, path) in tables.items():
            if panel.x not in table["columns"]:
                raise PlotDataError(f"column '{panel.x}' missing from {path}")
            x = table["data"][panel.x]
            style = spec.styles.get(label, scenario_style(label))
            for curve in panel.curves:
                y = curve_values(table, curve, path)
                mask = np.isfinite(x) & np.isfinite(y)
                if not np.any(mask):
                    continue
                ax.plot(x[mask], y[mask], label=f"{curve.label} [{label}]",
                        **style)
                result.series[(panel.key, label, curve.label)] = (
                    x[mask].copy(), y[mask].copy())
        ax.set_title(f"({panel.key}) {panel.title}", fontsize=10)
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(panel.ylabel)
        ax.set_yscale(panel.yscale)
        ax.grid(alpha=0.25)
        ax.legend(fontsize=7)
    fig.tight_layout()

    os.makedirs(out_dir, exist_ok=True)
    for fmt in formats:
        path = os.path.join(out_dir, f"{spec.name}.{fmt}")
        fig.savefig(path, dpi=150)
        result.files.append(path)
    plt.close(fig)
    return result


def render_preset(name: str, in_dir: str, out_dir: str,
                  formats=("png", "svg")) -> RenderResult:
    from .presets import PRESETS

    spec = PRESETS[name]()
    spec.inputs = discover_inputs(in_dir, name)
    return render(spec, out_dir, formats)
